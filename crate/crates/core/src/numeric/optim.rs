//! First-order optimizers over a list of flat parameter blocks.
//!
//! Weight decay is applied as an L2 term added to the gradient for both kinds, so
//! SGD-momentum is `v ← μv + (g + wd·p); p ← p − lr·v` and Adam sees `g + wd·p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64, momentum: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimizerKind::SgdMomentum { momentum },
            learning_rate,
            weight_decay,
        }
    }

    pub fn adam(learning_rate: f64, beta1: f64, beta2: f64, weight_decay: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon: 1e-8,
            },
            learning_rate,
            weight_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    config: OptimizerConfig,
    step: u64,
    /// Velocity (SGD) or first moment (Adam), one buffer per block.
    first: Vec<Vec<f64>>,
    /// Second moment (Adam only).
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, block_sizes: &[usize]) -> Self {
        let zeros = |sizes: &[usize]| sizes.iter().map(|&n| vec![0.0; n]).collect::<Vec<_>>();
        let second = match config.kind {
            OptimizerKind::Adam { .. } => zeros(block_sizes),
            OptimizerKind::SgdMomentum { .. } => Vec::new(),
        };
        Self {
            config,
            step: 0,
            first: zeros(block_sizes),
            second,
        }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update to every block. Nothing is modified if any gradient is
    /// non-finite or any shape disagrees with the buffers.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::DimensionMismatch {
                context: "optimizer blocks",
                expected: self.first.len(),
                found: params.len().min(grads.len()),
            });
        }
        for (block, ((p, g), buf)) in params.iter().zip(grads).zip(&self.first).enumerate() {
            if p.len() != buf.len() || g.len() != buf.len() {
                return Err(Error::DimensionMismatch {
                    context: "optimizer block",
                    expected: buf.len(),
                    found: if p.len() != buf.len() { p.len() } else { g.len() },
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { block });
            }
        }

        self.step += 1;
        let lr = self.config.learning_rate;
        let wd = self.config.weight_decay;
        match self.config.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((p, &g), v) in p.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                        *v = momentum * *v + (g + wd * *p);
                        *p -= lr * *v;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((p, &g), m), v) in
                        p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        let g = g + wd * *p;
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let mhat = *m / c1;
                        let vhat = *v / c2;
                        *p -= lr * mhat / (vhat.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}
