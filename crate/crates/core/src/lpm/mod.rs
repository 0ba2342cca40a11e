//! The latency prediction module (LPM): a four-layer perceptron from an architecture
//! encoding to latency in milliseconds.
//!
//! Hidden layers have 112, 256 and 64 sigmoid units; the output unit is linear. The
//! network works on targets min-max scaled to `[0, 1]` and the scaler is part of the
//! model, so every public prediction is in milliseconds.

mod eval;
mod model;
mod train;

pub use eval::{evaluate, evaluate_predictions, kendall_tau, EvalReport, KendallStats};
pub use model::{Lpm, Scaler, HIDDEN_DIMS, MODEL_VERSION};
pub use train::{train_lpm, LpmTrainConfig, TrainOutcome};

use crate::error::{Error, Result};
use crate::oracle::CostTable;
use crate::space::CellConfig;

/// Anything that maps an encoding vector to a latency with an input gradient.
///
/// The search loop only needs this interface, so an additive stub can stand in for a
/// trained model.
pub trait LatencyPredictor: Sync {
    fn input_dim(&self) -> usize;

    /// Latency range used to normalize the latency loss: `(min_ms, max_ms)`.
    fn latency_range(&self) -> (f64, f64);

    /// Prediction in ms and its gradient with respect to `input`.
    fn predict_with_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)>;

    fn predict_vec(&self, input: &[f64]) -> Result<f64> {
        Ok(self.predict_with_grad(input)?.0)
    }
}

impl LatencyPredictor for Lpm {
    fn input_dim(&self) -> usize {
        Lpm::input_dim(self)
    }

    fn latency_range(&self) -> (f64, f64) {
        (self.scaler().min_ms, self.scaler().max_ms)
    }

    fn predict_with_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
        Lpm::predict_with_grad(self, input)
    }

    fn predict_vec(&self, input: &[f64]) -> Result<f64> {
        Lpm::predict_vec(self, input)
    }
}

/// Additive predictor: the dot product of the encoding with per-bit table latencies.
/// On binary encodings this equals `table_latency`.
#[derive(Debug, Clone)]
pub struct TablePredictor {
    weights: Vec<f64>,
    range: (f64, f64),
}

impl TablePredictor {
    pub fn new(config: &CellConfig, table: &CostTable) -> Result<Self> {
        table.validate()?;
        let costs: Vec<f64> = config
            .ops()
            .iter()
            .map(|&op| if op.index() == 0 { 0.0 } else { table.latency_ms.get(op) })
            .collect();
        let weights = (0..config.num_edges())
            .flat_map(|_| costs.iter().copied())
            .collect();
        let selected = (2 * config.num_intermediate()) as f64;
        let lo = costs[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let hi = costs[1..].iter().copied().fold(0.0, f64::max);
        if hi <= lo {
            return Err(Error::DegenerateScaler(lo * selected));
        }
        Ok(Self {
            weights,
            range: (lo * selected, hi * selected),
        })
    }
}

impl LatencyPredictor for TablePredictor {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn latency_range(&self) -> (f64, f64) {
        self.range
    }

    fn predict_with_grad(&self, input: &[f64]) -> Result<(f64, Vec<f64>)> {
        if input.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "predictor input",
                expected: self.weights.len(),
                found: input.len(),
            });
        }
        let value = input.iter().zip(&self.weights).map(|(x, w)| x * w).sum();
        Ok((value, self.weights.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rng;
    use crate::oracle::table_latency;
    use crate::space::{encode, sample_uniform_arch};

    #[test]
    fn table_predictor_matches_table_latency() {
        let cfg = CellConfig::default();
        let table = CostTable::default();
        let p = TablePredictor::new(&cfg, &table).unwrap();
        let mut rng = Rng::new(4);
        for _ in 0..50 {
            let arch = sample_uniform_arch(&cfg, &mut rng);
            let x = encode(&arch, &cfg).unwrap().to_f64();
            let want = table_latency(&arch, &cfg, &table).unwrap();
            assert!((p.predict_vec(&x).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(p.latency_range(), (8.0 * 0.3, 8.0 * 3.4));
    }
}
