use serde::{Deserialize, Serialize};

use super::{Lpm, Scaler};
use crate::error::{Error, Result};
use crate::numeric::{sgemm, Activation, OptimizerConfig, OptimizerState, Rng, View};
use crate::oracle::LatencyDataset;
use crate::space::CellConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpmTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for LpmTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 1e-5,
            seed: 0,
        }
    }
}

impl LpmTrainConfig {
    pub fn validate(&self, n_train: usize) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if self.batch_size > n_train {
            return Err(Error::Config(format!(
                "batch size {} exceeds the {n_train} training records",
                self.batch_size
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.momentum.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Lpm,
    /// Mean normalized-target MSE over the minibatches of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains an LPM on `train` with minibatch momentum SGD on the MSE of min-max scaled
/// targets. Deterministic given the data and `cfg.seed`.
pub fn train_lpm(train: &LatencyDataset, config: &CellConfig, cfg: &LpmTrainConfig) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    cfg.validate(train.len())?;
    let (xs, ys) = train.inputs(config)?;
    train_on_arrays(&xs, &ys, config.encoding_len(), cfg)
}

pub(crate) fn train_on_arrays(xs: &[f64], ys: &[f64], width: usize, cfg: &LpmTrainConfig) -> Result<TrainOutcome> {
    let n = ys.len();
    cfg.validate(n)?;
    let scaler = Scaler::fit(ys)?;
    let targets: Vec<f64> = ys.iter().map(|&y| scaler.normalize(y)).collect();

    let mut init_rng = Rng::substream(cfg.seed, 0);
    let mut shuffle_rng = Rng::substream(cfg.seed, 1);
    let mut model = Lpm::new(width, scaler, &mut init_rng);

    let block_sizes: Vec<usize> = model
        .layers()
        .iter()
        .flat_map(|l| [l.weights().len(), l.biases().len()])
        .collect();
    let mut opt = OptimizerState::new(
        OptimizerConfig::sgd(cfg.learning_rate, cfg.momentum, cfg.weight_decay),
        &block_sizes,
    );
    let mut net = Net32::new(&model, xs, width);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut sum_sq = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            net.load(&model);
            sum_sq += net.forward_backward(xs, &targets, idx);
            let grad_refs: Vec<&[f64]> = net
                .grad_w
                .iter()
                .zip(&net.grad_b)
                .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
                .collect();
            let mut params: Vec<&mut [f64]> = model
                .layers_mut()
                .iter_mut()
                .flat_map(|l| {
                    let (w, b) = l.params_mut();
                    [w, b]
                })
                .collect();
            opt.step(&mut params, &grad_refs).map_err(|_| Error::Diverged { epoch })?;
        }
        let loss = sum_sq / n as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epoch_losses.push(loss);
    }
    model.set_train_config(cfg.clone());
    Ok(TrainOutcome { model, epoch_losses })
}

/// Single-precision working copy of the network for the minibatch passes. The f64
/// model stays the master copy that the optimizer updates; gradients are widened
/// back to f64 before each step.
struct Net32 {
    dims: Vec<(usize, usize, Activation)>,
    /// Active columns of each 0/1 input row, when every input is 0/1. The first
    /// layer then skips its matrix products and its weights are kept transposed.
    active: Option<Vec<Vec<u32>>>,
    w: Vec<Vec<f32>>,
    b: Vec<Vec<f32>>,
    x: Vec<f32>,
    acts: Vec<Vec<f32>>,
    delta: Vec<f32>,
    next_delta: Vec<f32>,
    gw: Vec<f32>,
    grad_w: Vec<Vec<f64>>,
    grad_b: Vec<Vec<f64>>,
}

impl Net32 {
    fn new(model: &Lpm, xs: &[f64], width: usize) -> Self {
        let dims: Vec<_> = model
            .layers()
            .iter()
            .map(|l| (l.in_dim(), l.out_dim(), l.activation()))
            .collect();
        let active = xs.iter().all(|&v| v == 0.0 || v == 1.0).then(|| {
            xs.chunks_exact(width)
                .map(|row| (0..width as u32).filter(|&i| row[i as usize] == 1.0).collect())
                .collect()
        });
        let depth = dims.len();
        Self {
            active,
            w: dims.iter().map(|&(i, o, _)| vec![0.0; i * o]).collect(),
            b: dims.iter().map(|&(_, o, _)| vec![0.0; o]).collect(),
            x: Vec::new(),
            acts: vec![Vec::new(); depth],
            delta: Vec::new(),
            next_delta: Vec::new(),
            gw: Vec::new(),
            grad_w: dims.iter().map(|&(i, o, _)| vec![0.0; i * o]).collect(),
            grad_b: dims.iter().map(|&(_, o, _)| vec![0.0; o]).collect(),
            dims,
        }
    }

    fn load(&mut self, model: &Lpm) {
        for (l, layer) in model.layers().iter().enumerate() {
            let (i, o, _) = self.dims[l];
            let w = &mut self.w[l];
            if l == 0 && self.active.is_some() {
                for r in 0..o {
                    for c in 0..i {
                        w[c * o + r] = layer.weights()[r * i + c] as f32;
                    }
                }
            } else {
                w.iter_mut().zip(layer.weights()).for_each(|(d, &s)| *d = s as f32);
            }
            self.b[l].iter_mut().zip(layer.biases()).for_each(|(d, &s)| *d = s as f32);
        }
    }

    /// Runs one minibatch, leaving the mean-loss gradients in `grad_w`/`grad_b`.
    /// Returns the summed squared error of the batch.
    fn forward_backward(&mut self, xs: &[f64], targets: &[f64], idx: &[usize]) -> f64 {
        let bsz = idx.len();
        let depth = self.dims.len();
        let (in0, out0, _) = self.dims[0];

        match &self.active {
            Some(active) => {
                let out = &mut self.acts[0];
                out.clear();
                for &r in idx {
                    let start = out.len();
                    out.extend_from_slice(&self.b[0]);
                    let row = &mut out[start..];
                    for &c in &active[r] {
                        let w = &self.w[0][c as usize * out0..(c as usize + 1) * out0];
                        row.iter_mut().zip(w).for_each(|(v, w)| *v += w);
                    }
                }
            }
            None => {
                self.x.clear();
                for &r in idx {
                    self.x.extend(xs[r * in0..(r + 1) * in0].iter().map(|&v| v as f32));
                }
                affine(&self.x, &self.w[0], &self.b[0], bsz, in0, out0, &mut self.acts[0]);
            }
        }
        activate(self.dims[0].2, &mut self.acts[0]);
        for l in 1..depth {
            let (i, o, act) = self.dims[l];
            let (done, rest) = self.acts.split_at_mut(l);
            affine(&done[l - 1], &self.w[l], &self.b[l], bsz, i, o, &mut rest[0]);
            activate(act, &mut rest[0]);
        }

        let mut sum_sq = 0.0;
        self.delta.clear();
        self.delta.extend(self.acts[depth - 1].iter().zip(idx).map(|(&o, &r)| {
            let d = o as f64 - targets[r];
            sum_sq += d * d;
            (2.0 * d / bsz as f64) as f32
        }));

        for l in (0..depth).rev() {
            let (i, o, act) = self.dims[l];
            if act != Activation::Identity {
                for (d, &y) in self.delta.iter_mut().zip(&self.acts[l]) {
                    *d *= match act {
                        Activation::Sigmoid => y * (1.0 - y),
                        _ => act.derivative_from_output(y as f64) as f32,
                    };
                }
            }
            let gb = &mut self.grad_b[l];
            gb.iter_mut().for_each(|g| *g = 0.0);
            for row in self.delta.chunks_exact(o) {
                gb.iter_mut().zip(row).for_each(|(g, &d)| *g += d as f64);
            }

            self.gw.clear();
            self.gw.resize(i * o, 0.0);
            match (&self.active, l) {
                (Some(active), 0) => {
                    for (&r, delta) in idx.iter().zip(self.delta.chunks_exact(o)) {
                        for &c in &active[r] {
                            let g = &mut self.gw[c as usize * o..(c as usize + 1) * o];
                            g.iter_mut().zip(delta).for_each(|(g, d)| *g += d);
                        }
                    }
                    for r in 0..o {
                        for c in 0..i {
                            self.grad_w[0][r * i + c] = self.gw[c * o + r] as f64;
                        }
                    }
                }
                _ => {
                    let input = if l == 0 { &self.x[..] } else { &self.acts[l - 1][..] };
                    sgemm(
                        1.0,
                        View::new(&self.delta, bsz, o).t(),
                        View::new(input, bsz, i),
                        0.0,
                        &mut self.gw,
                    );
                    self.grad_w[l].iter_mut().zip(&self.gw).for_each(|(d, &s)| *d = s as f64);
                }
            }

            if l > 0 {
                self.next_delta.clear();
                self.next_delta.resize(bsz * i, 0.0);
                sgemm(
                    1.0,
                    View::new(&self.delta, bsz, o),
                    View::new(&self.w[l], o, i),
                    0.0,
                    &mut self.next_delta,
                );
                std::mem::swap(&mut self.delta, &mut self.next_delta);
            }
        }
        sum_sq
    }
}

/// `out = x·wᵀ + b` for row-major `x: (rows, i)` and `w: (o, i)`.
fn affine(x: &[f32], w: &[f32], b: &[f32], rows: usize, i: usize, o: usize, out: &mut Vec<f32>) {
    out.clear();
    for _ in 0..rows {
        out.extend_from_slice(b);
    }
    sgemm(1.0, View::new(x, rows, i), View::new(w, o, i).t(), 1.0, out);
}

fn activate(act: Activation, v: &mut [f32]) {
    match act {
        Activation::Identity => {}
        Activation::Sigmoid => v.iter_mut().for_each(|v| *v = sigmoid_f32(*v)),
        _ => v.iter_mut().for_each(|v| *v = act.apply(*v as f64) as f32),
    }
}

/// 1.5 · 2^23: adding it rounds to the nearest integer in the low mantissa bits.
const ROUND_MAGIC_F32: f32 = 12_582_912.0;

/// Single-precision logistic function. `exp` uses range reduction and a degree-6
/// polynomial without branches or calls, so slice loops vectorize.
#[inline(always)]
fn sigmoid_f32(z: f32) -> f32 {
    let x = (-z).clamp(-87.0, 87.0);
    let shifted = x * std::f32::consts::LOG2_E + ROUND_MAGIC_F32;
    let k = shifted - ROUND_MAGIC_F32;
    let r = x - k * 0.693_145_75 - k * 1.428_606_8e-6;
    let p = 1.0 + r * (1.0 + r * (0.5 + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0))))));
    let ki = shifted.to_bits().wrapping_sub(ROUND_MAGIC_F32.to_bits());
    let scale = f32::from_bits(ki.wrapping_add(127) << 23);
    1.0 / (1.0 + p * scale)
}
