mod common;

use common::*;
use ladnas_core::numeric::Rng;
use ladnas_core::space::CellConfig;

fn worst(instances: usize, seed: u64, mut f: impl FnMut(&mut Rng) -> f64) -> f64 {
    let mut rng = Rng::new(seed);
    (0..instances).map(|_| f(&mut rng)).fold(0.0, f64::max)
}

#[test]
fn lpm_input_gradient_matches_finite_differences() {
    let e = worst(100, 1, lpm_instance);
    assert!(e < 1e-5, "{e}");
}

#[test]
fn softmax_vjp_matches_finite_differences() {
    let e = worst(200, 2, softmax_instance);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn dense_backward_matches_finite_differences() {
    let e = worst(200, 3, dense_instance);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn conv_backward_matches_finite_differences() {
    let e = worst(200, 4, conv_instance);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn small_supernet_backward_matches_finite_differences() {
    let cell = small_cell();
    let e = worst(100, 5, |rng| supernet_instance(&cell, 4, usize::MAX, rng));
    assert!(e < 1e-4, "{e}");
}

#[test]
fn full_op_supernet_backward_matches_finite_differences() {
    let cell = CellConfig::reduced(2, 7).unwrap();
    let e = worst(20, 6, |rng| supernet_instance(&cell, 16, 80, rng));
    assert!(e < 1e-4, "{e}");
}
