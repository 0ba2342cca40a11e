//! Latency-aware differentiable architecture search on a synthetic classification task.
//!
//! The network weights ω are trained on one data split and the architectural logits α
//! on the other, alternating per minibatch (first-order). The α objective is the
//! validation cross-entropy plus either `λ · LAT(α)`, a sampled latency estimate from a
//! [`LatencyPredictor`](crate::lpm::LatencyPredictor), or `η · E[FLOPs](α)`, which is
//! linear in α̃ and needs no sampling.

mod artifacts;
mod latency;
mod run;
mod supernet;
mod task;

pub use artifacts::{ArchFile, ArchFileEdge, HistoryRow, SearchHistory, ARCH_FILE_VERSION, HISTORY_HEADER};
pub use latency::{latency_loss, LatencyEstimate};
pub use run::{
    evaluate_arch, one_hot_params, run_flops_search, run_search, FlopsSearchConfig, SearchConfig,
    SearchOutcome, TrainingConfig,
};
pub use supernet::{BatchResult, Supernet};
pub use task::{Split, Task, TaskConfig};
