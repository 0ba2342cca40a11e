//! Fully-connected layer `y = activation(W·x + b)`.
//!
//! Weights are row-major with shape `(out_dim, in_dim)`. The single-sample methods
//! return `Result` and report both dimensions on mismatch; the batch methods are the
//! training hot path and work on row-major `(batch, dim)` buffers.

use serde::{Deserialize, Serialize};

use super::matrix::{gemm, View};
use super::rng::Rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of the activation's output.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
/// 1.5 · 2^52: adding it rounds to the nearest integer, which lands in the low mantissa bits.
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// `exp` by range reduction and a degree-13 Taylor polynomial, written without
/// branches or library calls so that slice loops vectorize. Relative error is a few
/// ulp over the clamped domain `[-708, 708]`.
#[inline(always)]
fn exp_vectorizable(x: f64) -> f64 {
    let x = x.clamp(-708.0, 708.0);
    let shifted = x * LOG2E + ROUND_MAGIC;
    let k = shifted - ROUND_MAGIC;
    let r = x - k * LN2_HI - k * LN2_LO;
    // Estrin evaluation of the Taylor series keeps the dependency chain short.
    let r2 = r * r;
    let r4 = r2 * r2;
    let r8 = r4 * r4;
    let p01 = 1.0 + r;
    let p23 = 0.5 + r * (1.0 / 6.0);
    let p45 = 1.0 / 24.0 + r * (1.0 / 120.0);
    let p67 = 1.0 / 720.0 + r * (1.0 / 5_040.0);
    let p89 = 1.0 / 40_320.0 + r * (1.0 / 362_880.0);
    let p1011 = 1.0 / 3_628_800.0 + r * (1.0 / 39_916_800.0);
    let p1213 = 1.0 / 479_001_600.0 + r * (1.0 / 6_227_020_800.0);
    let q0 = p01 + r2 * p23;
    let q1 = p45 + r2 * p67;
    let q2 = p89 + r2 * p1011;
    let p = (q0 + r4 * q1) + r8 * (q2 + r4 * p1213);
    let ki = shifted.to_bits().wrapping_sub(ROUND_MAGIC.to_bits());
    let scale = f64::from_bits(ki.wrapping_add(1023) << 52);
    p * scale
}

#[inline(always)]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + exp_vectorizable(-z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub input: Vec<f64>,
}

impl DenseLayer {
    /// Glorot-uniform weights on `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.uniform_range(-limit, limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn from_parts(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                context: "dense weights",
                expected: in_dim * out_dim,
                found: weights.len(),
            });
        }
        if biases.len() != out_dim {
            return Err(Error::DimensionMismatch {
                context: "dense biases",
                expected: out_dim,
                found: biases.len(),
            });
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense layer parameters".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// Mutable access to both parameter blocks at once, for optimizer steps.
    pub fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.biases)
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.in_dim {
            return Err(Error::DimensionMismatch {
                context: "dense input",
                expected: self.in_dim,
                found: len,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        Ok(self
            .weights
            .chunks_exact(self.in_dim.max(1))
            .zip(&self.biases)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
                self.activation.apply(z)
            })
            .collect())
    }

    /// Gradients of `grad_out · layer(x)` with respect to weights, biases and input.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<DenseGrads> {
        self.check_input(x.len())?;
        if grad_out.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                context: "dense grad_out",
                expected: self.out_dim,
                found: grad_out.len(),
            });
        }
        let y = self.forward(x)?;
        let delta: Vec<f64> = y
            .iter()
            .zip(grad_out)
            .map(|(&y, &g)| g * self.activation.derivative_from_output(y))
            .collect();
        let mut weights = vec![0.0; self.in_dim * self.out_dim];
        let mut input = vec![0.0; self.in_dim];
        for (o, &d) in delta.iter().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut weights[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] = d * x[i];
                input[i] += d * row[i];
            }
        }
        Ok(DenseGrads {
            weights,
            biases: delta,
            input,
        })
    }

    /// Batched forward pass over row-major `(batch, in_dim)` inputs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Vec<f64> {
        assert_eq!(inputs.len(), batch * self.in_dim, "dense batch input shape");
        let mut out = Vec::with_capacity(batch * self.out_dim);
        for _ in 0..batch {
            out.extend_from_slice(&self.biases);
        }
        gemm(
            1.0,
            View::new(inputs, batch, self.in_dim),
            View::new(&self.weights, self.out_dim, self.in_dim).t(),
            1.0,
            &mut out,
        );
        match self.activation {
            Activation::Identity => {}
            Activation::Sigmoid => out.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Tanh => out.iter_mut().for_each(|v| *v = v.tanh()),
        }
        out
    }

    /// Batched backward pass. `outputs` are the activated outputs from
    /// [`forward_batch`](Self::forward_batch); `grad_out` is consumed as scratch space
    /// and becomes the pre-activation delta. Input gradients are only computed when
    /// `want_input` is set.
    pub fn backward_batch(
        &self,
        inputs: &[f64],
        outputs: &[f64],
        grad_out: &mut [f64],
        batch: usize,
        want_input: bool,
        grads: &mut DenseGrads,
    ) -> Option<Vec<f64>> {
        assert_eq!(outputs.len(), batch * self.out_dim);
        assert_eq!(grad_out.len(), batch * self.out_dim);
        if self.activation != Activation::Identity {
            for (g, &y) in grad_out.iter_mut().zip(outputs) {
                *g *= self.activation.derivative_from_output(y);
            }
        }
        let delta = View::new(grad_out, batch, self.out_dim);
        gemm(
            1.0,
            delta.t(),
            View::new(inputs, batch, self.in_dim),
            0.0,
            &mut grads.weights,
        );
        grads.biases.iter_mut().for_each(|b| *b = 0.0);
        for row in grad_out.chunks_exact(self.out_dim) {
            for (b, d) in grads.biases.iter_mut().zip(row) {
                *b += d;
            }
        }
        if !want_input {
            return None;
        }
        let mut input = vec![0.0; batch * self.in_dim];
        gemm(
            1.0,
            delta,
            View::new(&self.weights, self.out_dim, self.in_dim),
            0.0,
            &mut input,
        );
        Some(input)
    }

    pub fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            weights: vec![0.0; self.in_dim * self.out_dim],
            biases: vec![0.0; self.out_dim],
            input: Vec::new(),
        }
    }
}
