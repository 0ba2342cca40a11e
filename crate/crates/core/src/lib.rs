//! Latency-aware differentiable architecture search.
//!
//! The crate is organised bottom-up:
//!
//! - [`numeric`]: dense layers, 1-D convolutions, softmax, losses, optimizers and
//!   the seeded RNG. Everything is `f64`.
//! - [`space`]: the normal-cell search space, its 112-bit encoding, architectural
//!   parameters, sampling and discretization.
//! - [`oracle`]: ground-truth latency sources (synthetic hardware model, additive
//!   lookup table, external command) and the JSONL dataset pipeline.
//! - [`lpm`]: the latency prediction module, its training loop and evaluation
//!   metrics.
//! - [`search`]: the weight-sharing supernet and the bi-level search loop with the
//!   sampled latency loss or the FLOPs penalty.
//! - [`cli`]: the `ladnas` command-line entry points.

pub mod cli;
pub mod error;
pub mod lpm;
pub mod numeric;
pub mod oracle;
pub mod search;
pub mod space;

pub use error::{EncodingError, Error, OracleError, Result};
