//! Ground-truth latency sources and the dataset pipeline.
//!
//! Three oracles implement [`LatencyOracle`]:
//!
//! - [`SyntheticOracle`]: a deterministic hardware model whose latency depends on the
//!   cell topology (memory traffic from intermediate-sourced edges, critical-path
//!   depth) and not only on the multiset of operations.
//! - [`TableOracle`]: the purely additive lookup-table baseline.
//! - [`ExternalOracle`]: a child process speaking line-delimited JSON, for real
//!   hardware.

mod config;
mod dataset;
mod external;
mod synthetic;
mod table;

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::OracleError;
use crate::numeric::Rng;
use crate::space::{CellConfig, DiscreteArch, OperationKind};

pub use config::OracleConfig;
pub use dataset::{
    collect_dataset, split_dataset, CollectError, CollectOptions, DatasetMeta, FailureRecord,
    LatencyDataset, LatencyRecord, DATASET_VERSION,
};
pub use external::{external_latency, ExternalOracle, DEFAULT_TIMEOUT_S};
pub use synthetic::{synthetic_latency, SyntheticHardwareModel, SyntheticOracle};
pub use table::{expected_flops, flops, table_latency, CostTable, TableOracle};

/// A source of measured latency for one architecture.
pub trait LatencyOracle: Sync {
    fn id(&self) -> String;

    /// Parameters recorded in dataset metadata.
    fn describe(&self) -> serde_json::Value;

    /// How many measurements a record produced by this oracle aggregates.
    fn effective_repeats(&self, requested: u32) -> u32 {
        requested
    }

    fn measure(
        &self,
        arch: &DiscreteArch,
        config: &CellConfig,
        repeats: u32,
        rng: &mut Rng,
    ) -> Result<f64, OracleError>;
}

/// A non-negative cost for every non-`none` operation.
///
/// Serialized as a map from operation name to value in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpCosts([f64; 8]);

impl OpCosts {
    /// Costs for skip, max-pool, avg-pool, sep-3, sep-5, dil-3, dil-5 in that order.
    pub const fn new(costs: [f64; 7]) -> Self {
        let [a, b, c, d, e, f, g] = costs;
        Self([0.0, a, b, c, d, e, f, g])
    }

    pub fn get(&self, op: OperationKind) -> f64 {
        self.0[op.index()]
    }

    pub fn set(&mut self, op: OperationKind, value: f64) {
        assert!(op != OperationKind::None, "`none` has no cost entry");
        self.0[op.index()] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (OperationKind, f64)> + '_ {
        OperationKind::ALL[1..].iter().map(|&op| (op, self.get(op)))
    }

    pub fn validate(&self, what: &str) -> crate::Result<()> {
        for (op, v) in self.iter() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(crate::Error::Config(format!(
                    "{what}: cost for {op} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

impl Serialize for OpCosts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(7))?;
        for (op, v) in self.iter() {
            map.serialize_entry(op.name(), &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for OpCosts {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CostVisitor;

        impl<'de> Visitor<'de> for CostVisitor {
            type Value = OpCosts;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from operation name to cost")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<OpCosts, A::Error> {
                let mut costs = [f64::NAN; 8];
                costs[0] = 0.0;
                while let Some((name, value)) = map.next_entry::<String, f64>()? {
                    let op: OperationKind = name.parse().map_err(serde::de::Error::custom)?;
                    if op == OperationKind::None {
                        return Err(serde::de::Error::custom("`none` has no cost entry"));
                    }
                    costs[op.index()] = value;
                }
                if let Some(i) = costs.iter().position(|v| v.is_nan()) {
                    return Err(serde::de::Error::custom(format!(
                        "missing cost for {}",
                        OperationKind::ALL[i]
                    )));
                }
                Ok(OpCosts(costs))
            }
        }

        d.deserialize_map(CostVisitor)
    }
}
