use serde::{Deserialize, Serialize};

use super::{LatencyOracle, OpCosts};
use crate::error::{OracleError, Result};
use crate::numeric::Rng;
use crate::space::{CellConfig, DiscreteArch, NormalizedParams};

/// Per-operation latency (ms) and FLOPs (MFLOPs) lookup table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostTable {
    pub latency_ms: OpCosts,
    pub flops_m: OpCosts,
}

impl Default for CostTable {
    fn default() -> Self {
        Self {
            latency_ms: OpCosts::new([0.3, 0.8, 0.8, 2.6, 3.4, 1.9, 2.5]),
            flops_m: OpCosts::new([0.0, 15.0, 15.0, 90.0, 150.0, 45.0, 75.0]),
        }
    }
}

impl CostTable {
    pub fn validate(&self) -> Result<()> {
        self.latency_ms.validate("table latency")?;
        self.flops_m.validate("table flops")
    }
}

/// Additive latency: the sum of the table entries of the selected operations.
pub fn table_latency(arch: &DiscreteArch, config: &CellConfig, table: &CostTable) -> Result<f64> {
    arch.validate(config)?;
    Ok(arch.ops().map(|op| table.latency_ms.get(op)).sum())
}

pub fn flops(arch: &DiscreteArch, table: &CostTable) -> f64 {
    arch.ops().map(|op| table.flops_m.get(op)).sum()
}

/// Expected FLOPs under the sampler, as a linear function of the normalized weights:
/// `Σ_edges Σ_{op ≠ none} α̃[e, op] · F(op) · P(edge e kept)` where an edge into node `j`
/// is kept with probability `2 / j`. With `edge_weighting` off every edge counts with
/// weight one. Returns the value and its (constant) gradient with respect to α̃.
pub fn expected_flops(
    alpha_tilde: &NormalizedParams,
    config: &CellConfig,
    table: &CostTable,
    edge_weighting: bool,
) -> Result<(f64, Vec<f64>)> {
    alpha_tilde.check_config(config)?;
    let num_ops = config.num_ops();
    let mut grad = vec![0.0; config.encoding_len()];
    let mut total = 0.0;
    for edge in 0..config.num_edges() {
        let keep = if edge_weighting {
            2.0 / config.edge(edge).to as f64
        } else {
            1.0
        };
        let row = alpha_tilde.row(edge);
        for (pos, &op) in config.ops().iter().enumerate().skip(1) {
            let g = keep * table.flops_m.get(op);
            grad[edge * num_ops + pos] = g;
            total += row[pos] * g;
        }
    }
    Ok((total, grad))
}

#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    pub table: CostTable,
}

impl LatencyOracle for TableOracle {
    fn id(&self) -> String {
        "table".into()
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "kind": "table", "table": self.table })
    }

    fn measure(
        &self,
        arch: &DiscreteArch,
        config: &CellConfig,
        _repeats: u32,
        _rng: &mut Rng,
    ) -> Result<f64, OracleError> {
        let ms = table_latency(arch, config, &self.table)
            .map_err(|e| OracleError::InvalidArch(e.to_string()))?;
        if ms > 0.0 {
            Ok(ms)
        } else {
            Err(OracleError::NonPositive(ms))
        }
    }
}
