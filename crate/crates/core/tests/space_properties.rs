use ladnas_core::numeric::{softmax, Rng};
use ladnas_core::space::{
    decode, discretize, encode, encoding_grad_to_alpha, sample_subarch, sample_uniform_arch, ArchParams,
    CellConfig, Encoding, NormalizedParams,
};
use ladnas_core::EncodingError;
use proptest::prelude::*;

fn random_params(config: &CellConfig, rng: &mut Rng, scale: f64) -> ArchParams {
    let values = (0..config.encoding_len()).map(|_| scale * rng.normal()).collect();
    ArchParams::from_values(config, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn codec_round_trips(seed in any::<u64>()) {
        let cell = CellConfig::default();
        let arch = sample_uniform_arch(&cell, &mut Rng::new(seed));
        let enc = encode(&arch, &cell).unwrap();
        prop_assert_eq!(enc.set_indices().len(), 8);
        prop_assert_eq!(&decode(&enc, &cell).unwrap(), &arch);
        let text = enc.to_string();
        let reparsed = Encoding::parse(&text, &cell).unwrap();
        prop_assert_eq!(encode(&decode(&reparsed, &cell).unwrap(), &cell).unwrap(), enc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn sampled_and_discretized_archs_are_valid(seed in any::<u64>(), scale in 0.0f64..4.0) {
        let cell = CellConfig::default();
        let mut rng = Rng::new(seed);
        let at = random_params(&cell, &mut rng, scale).normalize().unwrap();
        for arch in [sample_subarch(&at, &cell, &mut rng).unwrap(), discretize(&at, &cell).unwrap()] {
            prop_assert!(arch.validate(&cell).is_ok());
            prop_assert_eq!(decode(&encode(&arch, &cell).unwrap(), &cell).unwrap(), arch);
        }
    }

    #[test]
    fn random_bit_strings_decode_or_fail_cleanly(seed in any::<u64>(), ones in 0usize..20) {
        let cell = CellConfig::default();
        let mut rng = Rng::new(seed);
        let mut bits = vec![false; 112];
        for _ in 0..ones {
            bits[rng.below(112)] = true;
        }
        let enc = Encoding::from_bits(bits);
        if let Ok(arch) = decode(&enc, &cell) {
            prop_assert_eq!(encode(&arch, &cell).unwrap(), enc);
        }
    }
}

/// Flips a valid encoding into each invalid class and checks the specific error.
#[test]
fn each_invalid_pattern_is_rejected_with_its_own_error() {
    let cell = CellConfig::default();
    let enc = encode(&sample_uniform_arch(&cell, &mut Rng::new(5)), &cell).unwrap();
    let text = enc.to_string();

    let short = &text[..111];
    assert!(matches!(
        Encoding::parse(short, &cell),
        Err(EncodingError::WrongLength { expected: 112, found: 111 })
    ));
    let bad = text.replacen('0', "x", 1);
    assert!(matches!(Encoding::parse(&bad, &cell), Err(EncodingError::BadCharacter { .. })));

    let set = enc.set_indices();
    let mut bits = enc.bits().to_vec();
    bits[set[0]] = false;
    assert!(matches!(
        decode(&Encoding::from_bits(bits), &cell),
        Err(EncodingError::SetBitCount { expected: 8, found: 7 })
    ));

    // Move one op bit onto the `none` column of the same edge.
    let mut bits = enc.bits().to_vec();
    bits[set[0]] = false;
    bits[set[0] / 8 * 8] = true;
    assert!(matches!(
        decode(&Encoding::from_bits(bits), &cell),
        Err(EncodingError::NoneSelected { .. })
    ));

    // Second op on an already selected edge, removing a bit elsewhere to keep 8 set.
    let mut bits = enc.bits().to_vec();
    let edge = set[0] / 8;
    let other = (1..8).map(|o| edge * 8 + o).find(|&i| !bits[i]).unwrap();
    bits[other] = true;
    bits[set[7]] = false;
    assert!(matches!(
        decode(&Encoding::from_bits(bits), &cell),
        Err(EncodingError::MultipleOpsOnEdge { .. })
    ));

    // Move node 2's second edge to node 3's first unselected edge.
    let mut bits = enc.bits().to_vec();
    bits[set[1]] = false;
    let free = (2..5)
        .map(|e| e * 8 + 1)
        .find(|&i| (0..8).all(|o| !bits[i / 8 * 8 + o]))
        .unwrap();
    bits[free] = true;
    assert!(matches!(
        decode(&Encoding::from_bits(bits), &cell),
        Err(EncodingError::EdgesPerNode { .. })
    ));
}

/// Chi-square critical values at significance 0.001.
const CHI2_DF9: f64 = 27.877;
const CHI2_DF6: f64 = 22.458;

fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

#[test]
fn sampler_marginals_pass_chi_square() {
    const N: usize = 100_000;
    let cell = CellConfig::default();
    let mut rng = Rng::new(11);
    let at = random_params(&cell, &mut rng, 1.0).normalize().unwrap();
    let watched = cell.edge_index(0, 5).unwrap();

    let mut pair_counts = [0u64; 25];
    let mut edge_counts = [0u64; 5];
    let mut op_counts = [0u64; 7];
    let mut watched_hits = 0u64;
    let mut rng = Rng::new(12);
    for _ in 0..N {
        let arch = sample_subarch(&at, &cell, &mut rng).unwrap();
        let into5: Vec<_> = arch.selections().iter().filter(|s| s.to == 5).collect();
        assert_eq!(into5.len(), 2);
        pair_counts[into5[0].from * 5 + into5[1].from] += 1;
        for s in &into5 {
            edge_counts[s.from] += 1;
        }
        if let Some(s) = arch.selections().iter().find(|s| s.from == 0 && s.to == 5) {
            op_counts[s.op.index() - 1] += 1;
            watched_hits += 1;
        }
    }

    for &c in &edge_counts {
        assert!((c as f64 / N as f64 - 0.4).abs() < 0.01, "{edge_counts:?}");
    }
    let pairs: Vec<u64> = (0..5)
        .flat_map(|a| (a + 1..5).map(move |b| (a, b)))
        .map(|(a, b)| pair_counts[a * 5 + b])
        .collect();
    assert_eq!(pairs.len(), 10);
    let stat = chi_square(&pairs, &[N as f64 / 10.0; 10]);
    assert!(stat < CHI2_DF9, "edge-pair chi-square {stat}");

    let row = &at.row(watched)[1..];
    let mass: f64 = row.iter().sum();
    let expected: Vec<f64> = row.iter().map(|p| p / mass * watched_hits as f64).collect();
    let stat = chi_square(&op_counts, &expected);
    assert!(stat < CHI2_DF6, "op chi-square {stat}");
}

#[test]
fn uniform_op_frequencies_are_one_seventh() {
    let cell = CellConfig::default();
    let at = NormalizedParams::uniform(&cell);
    let mut counts = [0u64; 7];
    let mut rng = Rng::new(4);
    for _ in 0..100_000 {
        let arch = sample_subarch(&at, &cell, &mut rng).unwrap();
        counts[arch.selections()[0].op.index() - 1] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e5 - 1.0 / 7.0).abs() < 0.01, "{counts:?}");
    }
}

#[test]
fn encoding_grad_to_alpha_matches_finite_differences() {
    const H: f64 = 1e-6;
    let cell = CellConfig::default();
    let mut rng = Rng::new(21);
    for _ in 0..50 {
        let alpha = random_params(&cell, &mut rng, 1.5);
        let g: Vec<f64> = (0..112).map(|_| rng.normal()).collect();
        let analytic = encoding_grad_to_alpha(&g, &alpha.normalize().unwrap()).unwrap();
        let f = |v: &[f64]| -> f64 {
            v.chunks(8)
                .zip(g.chunks(8))
                .map(|(row, gr)| softmax(row).iter().zip(gr).map(|(p, q)| p * q).sum::<f64>())
                .sum()
        };
        let mut worst = 0.0f64;
        let mut scale = 1e-8f64;
        for i in 0..112 {
            let mut v = alpha.values().to_vec();
            v[i] += H;
            let up = f(&v);
            v[i] -= 2.0 * H;
            let numeric = (up - f(&v)) / (2.0 * H);
            worst = worst.max((numeric - analytic[i]).abs());
            scale = scale.max(numeric.abs());
        }
        assert!(worst / scale < 1e-6, "{}", worst / scale);
    }
}
