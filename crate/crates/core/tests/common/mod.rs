//! Finite-difference helpers shared by the integration tests.
#![allow(dead_code)]

use ladnas_core::lpm::{Lpm, Scaler};
use ladnas_core::numeric::{
    conv1d_backward, conv1d_forward, softmax, softmax_vjp, Activation, DenseLayer, Rng,
};
use ladnas_core::search::Supernet;
use ladnas_core::space::{ArchParams, CellConfig, OperationKind};

pub const H: f64 = 1e-6;

/// Central difference of `f` along coordinate `i` of `x`.
pub fn central<F: FnMut(&[f64]) -> f64>(x: &[f64], i: usize, h: f64, f: &mut F) -> f64 {
    let mut xp = x.to_vec();
    xp[i] += h;
    let fp = f(&xp);
    xp[i] = x[i] - h;
    let fm = f(&xp);
    (fp - fm) / (2.0 * h)
}

/// Largest coordinate error relative to the largest finite-difference magnitude.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
    analytic
        .iter()
        .zip(numeric)
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()))
        / scale
}

fn random_vec(n: usize, lo: f64, hi: f64, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_range(lo, hi)).collect()
}

/// LPM input gradient on a random real-valued input.
pub fn lpm_instance(rng: &mut Rng) -> f64 {
    let lpm = Lpm::new(112, Scaler::new(8.0, 40.0).unwrap(), rng);
    let x = random_vec(112, 0.0, 1.0, rng);
    let (_, g) = lpm.predict_with_grad(&x).unwrap();
    let mut f = |v: &[f64]| lpm.predict_vec(v).unwrap();
    let n: Vec<f64> = (0..112).map(|i| central(&x, i, H, &mut f)).collect();
    rel_err(&g, &n)
}

pub fn softmax_instance(rng: &mut Rng) -> f64 {
    let n = 2 + rng.below(9);
    let v = random_vec(n, -3.0, 3.0, rng);
    let w = random_vec(n, -1.0, 1.0, rng);
    let p = softmax(&v);
    let analytic = softmax_vjp(&p, &w);
    let mut f = |z: &[f64]| softmax(z).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let numeric: Vec<f64> = (0..n).map(|i| central(&v, i, H, &mut f)).collect();
    rel_err(&analytic, &numeric)
}

/// Worst of the weight, bias and input gradients of `w · layer(x)`.
pub fn dense_instance(rng: &mut Rng) -> f64 {
    let act = [Activation::Sigmoid, Activation::Tanh, Activation::Identity][rng.below(3)];
    let (ni, no) = (1 + rng.below(8), 1 + rng.below(8));
    let layer = DenseLayer::new(ni, no, act, rng);
    let x = random_vec(ni, -2.0, 2.0, rng);
    let w = random_vec(no, -1.0, 1.0, rng);
    let g = layer.backward(&x, &w).unwrap();
    let dot = |l: &DenseLayer, x: &[f64]| l.forward(x).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();

    let mut fx = |v: &[f64]| dot(&layer, v);
    let nx: Vec<f64> = (0..ni).map(|i| central(&x, i, H, &mut fx)).collect();

    let weights = layer.weights().to_vec();
    let mut fw = |v: &[f64]| {
        let l = DenseLayer::from_parts(ni, no, v.to_vec(), layer.biases().to_vec(), act).unwrap();
        dot(&l, &x)
    };
    let nw: Vec<f64> = (0..weights.len()).map(|i| central(&weights, i, H, &mut fw)).collect();

    let biases = layer.biases().to_vec();
    let mut fb = |v: &[f64]| {
        let l = DenseLayer::from_parts(ni, no, weights.clone(), v.to_vec(), act).unwrap();
        dot(&l, &x)
    };
    let nb: Vec<f64> = (0..no).map(|i| central(&biases, i, H, &mut fb)).collect();

    rel_err(&g.input, &nx).max(rel_err(&g.weights, &nw)).max(rel_err(&g.biases, &nb))
}

pub fn conv_instance(rng: &mut Rng) -> f64 {
    let k = [1, 3, 5][rng.below(3)];
    let dil = 1 + rng.below(2);
    let len = (k - 1) * dil + 1 + rng.below(8);
    let kernel = random_vec(k, -1.0, 1.0, rng);
    let x = random_vec(len, -2.0, 2.0, rng);
    let w = random_vec(len, -1.0, 1.0, rng);
    let (gk, gx) = conv1d_backward(&kernel, dil, &x, &w).unwrap();
    let dot = |kern: &[f64], x: &[f64]| {
        conv1d_forward(kern, dil, x).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut fk = |v: &[f64]| dot(v, &x);
    let nk: Vec<f64> = (0..k).map(|i| central(&kernel, i, H, &mut fk)).collect();
    let mut fx = |v: &[f64]| dot(&kernel, v);
    let nx: Vec<f64> = (0..len).map(|i| central(&x, i, H, &mut fx)).collect();
    rel_err(&gk, &nk).max(rel_err(&gx, &nx))
}

/// Small cell whose every kernel fits a 4-dimensional feature vector.
pub fn small_cell() -> CellConfig {
    use OperationKind::*;
    CellConfig::new(2, vec![None, SkipConnect, MaxPool3x3, AvgPool3x3, SepConv3x3]).unwrap()
}

/// Supernet loss gradient with respect to the weights and the logits α (through the
/// softmax). Checks every coordinate when the net is small and `max_coords` random
/// weight coordinates otherwise.
pub fn supernet_instance(cell: &CellConfig, dim: usize, max_coords: usize, rng: &mut Rng) -> f64 {
    let classes = 2 + rng.below(3);
    let net = Supernet::new(cell, dim, classes, rng).unwrap();
    let batch = 1 + rng.below(4);
    let xs = random_vec(batch * dim, -2.0, 2.0, rng);
    let ys: Vec<usize> = (0..batch).map(|_| rng.below(classes)).collect();
    let logits = random_vec(cell.encoding_len(), -1.5, 1.5, rng);
    let alpha = ArchParams::from_values(cell, logits.clone()).unwrap();
    let tilde = alpha.normalize().unwrap();
    let r = net.forward_backward(&tilde, &xs, &ys).unwrap();
    let grad_alpha = tilde.vjp(&r.grad_alpha_tilde).unwrap();

    let mut fa = |v: &[f64]| {
        let t = ArchParams::from_values(cell, v.to_vec()).unwrap().normalize().unwrap();
        net.forward(&t, &xs, &ys).unwrap().0
    };
    let na: Vec<f64> = (0..logits.len()).map(|i| central(&logits, i, H, &mut fa)).collect();
    let err_alpha = rel_err(&grad_alpha, &na);

    let params = net.params().to_vec();
    let coords: Vec<usize> = if params.len() <= max_coords {
        (0..params.len()).collect()
    } else {
        (0..max_coords).map(|_| rng.below(params.len())).collect()
    };
    let mut fp = |v: &[f64]| {
        let mut n = net.clone();
        n.params_mut().copy_from_slice(v);
        n.forward(&tilde, &xs, &ys).unwrap().0
    };
    let analytic: Vec<f64> = coords.iter().map(|&i| r.grad_params[i]).collect();
    let numeric: Vec<f64> = coords.iter().map(|&i| central(&params, i, H, &mut fp)).collect();
    err_alpha.max(rel_err(&analytic, &numeric))
}
