//! Dense-network numerics shared by the latency predictor and the supernet.
//!
//! Only the fixed shapes this crate needs are supported: row-major `f64` matrices,
//! fully-connected layers, same-length 1-D convolutions and pools, and a couple of
//! first-order optimizers. No autodiff; every backward pass is written by hand and
//! checked against central finite differences in the tests.

mod conv;
mod dense;
mod matrix;
mod ops;
mod optim;
mod rng;

pub use conv::{
    avg_pool3_backward, avg_pool3_forward, conv1d_backward, conv1d_forward, max_pool3_backward,
    max_pool3_forward,
};
pub use dense::{Activation, DenseGrads, DenseLayer};
pub use matrix::{gemm, sgemm, View};
pub use ops::{cross_entropy, mse, softmax, softmax_vjp};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use rng::Rng;
