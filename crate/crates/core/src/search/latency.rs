use crate::error::{Error, Result};
use crate::lpm::LatencyPredictor;
use crate::numeric::Rng;
use crate::space::{encode, encoding_grad_to_alpha, sample_subarch, CellConfig, NormalizedParams};

/// Monte-Carlo latency estimate with its straight-through gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyEstimate {
    /// Mean predicted latency over the samples, noise included, in ms.
    pub latency_ms: f64,
    /// Gradient of the noise-free mean with respect to the logits α, in ms.
    pub grad_alpha: Vec<f64>,
}

/// Samples `m` sub-architectures from α̃, predicts each and averages. The gradient
/// treats the binary encoding as the identity of α̃ in the backward pass and chains the
/// predictor's input gradient through the softmax. `noise_std_ms` perturbs each
/// prediction and contributes no gradient.
pub fn latency_loss(
    alpha_tilde: &NormalizedParams,
    config: &CellConfig,
    predictor: &dyn LatencyPredictor,
    m: usize,
    rng: &mut Rng,
    noise_std_ms: f64,
) -> Result<LatencyEstimate> {
    if m == 0 {
        return Err(Error::Config("latency sample count must be at least 1".into()));
    }
    if !(noise_std_ms.is_finite() && noise_std_ms >= 0.0) {
        return Err(Error::Config(format!("noise std must be non-negative, got {noise_std_ms}")));
    }
    if predictor.input_dim() != config.encoding_len() {
        return Err(Error::DimensionMismatch {
            context: "predictor input vs encoding",
            expected: config.encoding_len(),
            found: predictor.input_dim(),
        });
    }
    alpha_tilde.check_config(config)?;
    let mut total = 0.0;
    let mut grad_bits = vec![0.0; config.encoding_len()];
    for _ in 0..m {
        let arch = sample_subarch(alpha_tilde, config, rng)?;
        let x = encode(&arch, config)?.to_f64();
        let (ms, g) = predictor.predict_with_grad(&x)?;
        total += ms;
        if noise_std_ms > 0.0 {
            total += noise_std_ms * rng.normal();
        }
        for (a, b) in grad_bits.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let inv = 1.0 / m as f64;
    grad_bits.iter_mut().for_each(|g| *g *= inv);
    Ok(LatencyEstimate {
        latency_ms: total * inv,
        grad_alpha: encoding_grad_to_alpha(&grad_bits, alpha_tilde)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpm::{Lpm, Scaler, TablePredictor};
    use crate::oracle::CostTable;
    use crate::space::{ArchParams, OperationKind};

    #[test]
    fn single_sample_equals_prediction() {
        let cfg = CellConfig::default();
        let lpm = Lpm::new(112, Scaler::new(5.0, 40.0).unwrap(), &mut Rng::new(0));
        let alpha = ArchParams::zeros(&cfg).normalize().unwrap();
        let est = latency_loss(&alpha, &cfg, &lpm, 1, &mut Rng::new(9), 0.0).unwrap();
        let arch = sample_subarch(&alpha, &cfg, &mut Rng::new(9)).unwrap();
        assert_eq!(est.latency_ms, lpm.predict(&encode(&arch, &cfg).unwrap()).unwrap());
    }

    #[test]
    fn repeated_calls_are_identical() {
        let cfg = CellConfig::default();
        let lpm = Lpm::new(112, Scaler::new(5.0, 40.0).unwrap(), &mut Rng::new(0));
        let mut a = ArchParams::zeros(&cfg);
        a.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64 * 0.37).sin());
        let alpha = a.normalize().unwrap();
        let run = || latency_loss(&alpha, &cfg, &lpm, 20, &mut Rng::new(4), 0.0).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn all_skip_converges_to_exhaustive_mean() {
        let cfg = CellConfig::default();
        let table = CostTable::default();
        let stub = TablePredictor::new(&cfg, &table).unwrap();
        let mut a = ArchParams::zeros(&cfg);
        let skip = cfg.op_position(OperationKind::SkipConnect).unwrap();
        for e in 0..cfg.num_edges() {
            a.row_mut(e)[skip] = 50.0;
        }
        let alpha = a.normalize().unwrap();
        let est = latency_loss(&alpha, &cfg, &stub, 20_000, &mut Rng::new(1), 0.0).unwrap();
        // Every one of the 180 edge selections has eight skip edges.
        let want = 8.0 * 0.3;
        assert!((est.latency_ms - want).abs() < 1e-3 * want, "{}", est.latency_ms);
    }

    #[test]
    fn noise_moves_value_but_not_gradient() {
        let cfg = CellConfig::default();
        let lpm = Lpm::new(112, Scaler::new(5.0, 40.0).unwrap(), &mut Rng::new(0));
        let alpha = ArchParams::zeros(&cfg).normalize().unwrap();
        let clean = latency_loss(&alpha, &cfg, &lpm, 1, &mut Rng::new(2), 0.0).unwrap();
        let noisy = latency_loss(&alpha, &cfg, &lpm, 1, &mut Rng::new(2), 1.0).unwrap();
        assert_ne!(clean.latency_ms, noisy.latency_ms);
        assert_eq!(clean.grad_alpha, noisy.grad_alpha);
        assert!(latency_loss(&alpha, &cfg, &lpm, 0, &mut Rng::new(2), 0.0).is_err());
    }
}
