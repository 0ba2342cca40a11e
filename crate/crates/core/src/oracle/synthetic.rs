use serde::{Deserialize, Serialize};

use super::{LatencyOracle, OpCosts};
use crate::error::{Error, OracleError, Result};
use crate::numeric::Rng;
use crate::space::{CellConfig, DiscreteArch};

/// Deterministic latency model with two topology terms on top of per-op costs.
///
/// `latency = overhead + Σ base(op) + memory_penalty · #edges sourced at an
/// intermediate node + depth_penalty · depth + mean of `repeats` N(0, σ²) draws`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticHardwareModel {
    pub fixed_overhead_ms: f64,
    pub base_ms: OpCosts,
    pub memory_penalty_ms: f64,
    pub depth_penalty_ms: f64,
    pub measurement_noise_std_ms: f64,
}

impl Default for SyntheticHardwareModel {
    fn default() -> Self {
        Self {
            fixed_overhead_ms: 5.0,
            base_ms: OpCosts::new([0.3, 0.8, 0.8, 2.6, 3.4, 1.9, 2.5]),
            memory_penalty_ms: 0.9,
            depth_penalty_ms: 1.2,
            measurement_noise_std_ms: 0.0,
        }
    }
}

impl SyntheticHardwareModel {
    pub fn validate(&self) -> Result<()> {
        self.base_ms.validate("synthetic base costs")?;
        for (name, v) in [
            ("fixed_overhead_ms", self.fixed_overhead_ms),
            ("memory_penalty_ms", self.memory_penalty_ms),
            ("depth_penalty_ms", self.depth_penalty_ms),
            ("measurement_noise_std_ms", self.measurement_noise_std_ms),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Latency without measurement noise.
    pub fn noiseless(&self, arch: &DiscreteArch) -> f64 {
        let base: f64 = arch.ops().map(|op| self.base_ms.get(op)).sum();
        self.fixed_overhead_ms
            + base
            + self.memory_penalty_ms * arch.intermediate_sourced_edges() as f64
            + self.depth_penalty_ms * arch.depth() as f64
    }

    /// Copy with measurement noise switched off.
    pub fn noise_free(&self) -> Self {
        Self {
            measurement_noise_std_ms: 0.0,
            ..self.clone()
        }
    }
}

/// One aggregated measurement. Noise is only drawn (and `rng` only advanced) when the
/// model's noise level is positive.
pub fn synthetic_latency(
    arch: &DiscreteArch,
    config: &CellConfig,
    model: &SyntheticHardwareModel,
    repeats: u32,
    rng: &mut Rng,
) -> Result<f64> {
    arch.validate(config)?;
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let mut latency = model.noiseless(arch);
    if model.measurement_noise_std_ms > 0.0 {
        let noise: f64 = (0..repeats).map(|_| rng.normal()).sum::<f64>() / repeats as f64;
        latency += model.measurement_noise_std_ms * noise;
    }
    Ok(latency)
}

#[derive(Debug, Clone, Default)]
pub struct SyntheticOracle {
    pub model: SyntheticHardwareModel,
}

impl LatencyOracle for SyntheticOracle {
    fn id(&self) -> String {
        "synthetic".into()
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "synthetic", "model": self.model })
    }

    fn measure(
        &self,
        arch: &DiscreteArch,
        config: &CellConfig,
        repeats: u32,
        rng: &mut Rng,
    ) -> Result<f64, OracleError> {
        let ms = synthetic_latency(arch, config, &self.model, repeats, rng)
            .map_err(|e| OracleError::InvalidArch(e.to_string()))?;
        if ms > 0.0 {
            Ok(ms)
        } else {
            Err(OracleError::NonPositive(ms))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{OperationKind::*, Selection};

    fn arch(edges: &[(usize, usize)], op: crate::space::OperationKind) -> DiscreteArch {
        let sels = edges.iter().map(|&(from, to)| Selection { from, to, op }).collect();
        DiscreteArch::new(&CellConfig::default(), sels).unwrap()
    }

    const INPUT_ONLY: [(usize, usize); 8] =
        [(0, 2), (1, 2), (0, 3), (1, 3), (0, 4), (1, 4), (0, 5), (1, 5)];
    const CHAIN: [(usize, usize); 8] =
        [(0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5)];

    #[test]
    fn hand_evaluated_extremes() {
        let cfg = CellConfig::default();
        let m = SyntheticHardwareModel::default();
        let mut rng = Rng::new(0);
        let low = synthetic_latency(&arch(&INPUT_ONLY, SkipConnect), &cfg, &m, 20, &mut rng).unwrap();
        assert!((low - 8.6).abs() < 1e-12, "{low}");
        let a = arch(&CHAIN, SepConv5x5);
        assert_eq!(a.depth(), 4);
        assert_eq!(a.intermediate_sourced_edges(), 5);
        let high = synthetic_latency(&a, &cfg, &m, 20, &mut rng).unwrap();
        assert!((high - 41.5).abs() < 1e-12, "{high}");
    }

    #[test]
    fn noise_free_model_is_pure() {
        let cfg = CellConfig::default();
        let m = SyntheticHardwareModel::default();
        let a = arch(&CHAIN, DilConv3x3);
        let mut r1 = Rng::new(1);
        let mut r2 = Rng::new(99);
        let x = synthetic_latency(&a, &cfg, &m, 5, &mut r1).unwrap();
        let y = synthetic_latency(&a, &cfg, &m, 5, &mut r2).unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn noise_averages_over_repeats() {
        let cfg = CellConfig::default();
        let m = SyntheticHardwareModel {
            measurement_noise_std_ms: 1.0,
            ..Default::default()
        };
        let a = arch(&INPUT_ONLY, SkipConnect);
        let mut rng = Rng::new(4);
        let draws: Vec<f64> = (0..2000)
            .map(|_| synthetic_latency(&a, &cfg, &m, 20, &mut rng).unwrap() - 8.6)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        // std of a 20-sample mean is 1/sqrt(20)
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 0.05).abs() < 0.006, "{var}");
    }

    #[test]
    fn invalid_inputs() {
        let cfg = CellConfig::default();
        let m = SyntheticHardwareModel::default();
        assert!(synthetic_latency(&arch(&CHAIN, SkipConnect), &cfg, &m, 0, &mut Rng::new(0)).is_err());
        let reduced = CellConfig::reduced(2, 2).unwrap();
        assert!(synthetic_latency(&arch(&CHAIN, SkipConnect), &reduced, &m, 1, &mut Rng::new(0)).is_err());
        let bad = SyntheticHardwareModel {
            memory_penalty_ms: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
