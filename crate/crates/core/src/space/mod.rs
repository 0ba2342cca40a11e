//! The normal-cell search space.
//!
//! A cell has two input nodes (0 and 1) and `num_intermediate` intermediate nodes
//! (2, 3, ...). Every intermediate node `j` has one candidate edge from each earlier
//! node, so the default 4-node cell has 2 + 3 + 4 + 5 = 14 edges. Edges are ordered by
//! destination, then source: `(0,2), (1,2), (0,3), (1,3), (2,3), (0,4), ...`.
//!
//! Bit `edge · num_ops + op` of an [`Encoding`] is set when `op` is chosen on `edge`.

mod arch;
mod count;
mod params;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arch::{decode, encode, DiscreteArch, Encoding, Selection};
pub use count::{enumerate_archs, enumerate_edge_selections, space_size};
pub use params::{encoding_grad_to_alpha, ArchParams, NormalizedParams};
pub use sampling::{discretize, sample_subarch, sample_uniform_arch};

/// Candidate operations in their frozen canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum OperationKind {
    None = 0,
    SkipConnect = 1,
    MaxPool3x3 = 2,
    AvgPool3x3 = 3,
    SepConv3x3 = 4,
    SepConv5x5 = 5,
    DilConv3x3 = 6,
    DilConv5x5 = 7,
}

impl OperationKind {
    pub const ALL: [OperationKind; 8] = [
        OperationKind::None,
        OperationKind::SkipConnect,
        OperationKind::MaxPool3x3,
        OperationKind::AvgPool3x3,
        OperationKind::SepConv3x3,
        OperationKind::SepConv5x5,
        OperationKind::DilConv3x3,
        OperationKind::DilConv5x5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            OperationKind::None => "none",
            OperationKind::SkipConnect => "skip-connect",
            OperationKind::MaxPool3x3 => "max-pool-3x3",
            OperationKind::AvgPool3x3 => "avg-pool-3x3",
            OperationKind::SepConv3x3 => "sep-conv-3x3",
            OperationKind::SepConv5x5 => "sep-conv-5x5",
            OperationKind::DilConv3x3 => "dil-conv-3x3",
            OperationKind::DilConv5x5 => "dil-conv-5x5",
        }
    }

    /// Operations without learnable weights (`none`, skip and the pools).
    pub fn is_parameter_free(self) -> bool {
        matches!(
            self,
            OperationKind::None
                | OperationKind::SkipConnect
                | OperationKind::MaxPool3x3
                | OperationKind::AvgPool3x3
        )
    }
}

impl fmt::Display for OperationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown operation {s:?}")))
    }
}

impl Serialize for OperationKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OperationKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

/// Shape of the cell: number of intermediate nodes and the candidate operation list.
///
/// The op list always starts with `none` and is a subset of the canonical order;
/// the default uses all eight operations. Reduced configurations exist for exhaustive
/// checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellConfig {
    num_intermediate: usize,
    ops: Vec<OperationKind>,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            num_intermediate: 4,
            ops: OperationKind::ALL.to_vec(),
        }
    }
}

impl CellConfig {
    pub const MAX_INTERMEDIATE: usize = 8;

    pub fn new(num_intermediate: usize, ops: Vec<OperationKind>) -> Result<Self> {
        if num_intermediate == 0 || num_intermediate > Self::MAX_INTERMEDIATE {
            return Err(Error::Config(format!(
                "num_intermediate must be in 1..={}, got {num_intermediate}",
                Self::MAX_INTERMEDIATE
            )));
        }
        if ops.first() != Some(&OperationKind::None) {
            return Err(Error::Config("operation list must start with `none`".into()));
        }
        if ops.len() < 2 || ops.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "operation list must be strictly increasing in canonical order with at least one non-none op".into(),
            ));
        }
        Ok(Self {
            num_intermediate,
            ops,
        })
    }

    /// Reduced cell using the first `ops_excluding_none` non-none canonical operations.
    pub fn reduced(num_intermediate: usize, ops_excluding_none: usize) -> Result<Self> {
        if ops_excluding_none == 0 || ops_excluding_none > 7 {
            return Err(Error::Config(format!(
                "ops_excluding_none must be in 1..=7, got {ops_excluding_none}"
            )));
        }
        Self::new(
            num_intermediate,
            OperationKind::ALL[..=ops_excluding_none].to_vec(),
        )
    }

    pub fn num_intermediate(&self) -> usize {
        self.num_intermediate
    }

    pub fn num_nodes(&self) -> usize {
        self.num_intermediate + 2
    }

    pub fn ops(&self) -> &[OperationKind] {
        &self.ops
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn num_edges(&self) -> usize {
        (2..self.num_nodes()).sum()
    }

    pub fn encoding_len(&self) -> usize {
        self.num_edges() * self.num_ops()
    }

    /// Intermediate node ids, `2..num_nodes`.
    pub fn intermediate_nodes(&self) -> std::ops::Range<usize> {
        2..self.num_nodes()
    }

    /// Index of the first edge into node `to`.
    pub fn first_edge_of(&self, to: usize) -> usize {
        debug_assert!(to >= 2);
        (2..to).sum()
    }

    /// Edge indices entering node `to`, in source order.
    pub fn incoming(&self, to: usize) -> std::ops::Range<usize> {
        let start = self.first_edge_of(to);
        start..start + to
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Option<usize> {
        (from < to && to >= 2 && to < self.num_nodes()).then(|| self.first_edge_of(to) + from)
    }

    pub fn edge(&self, index: usize) -> Edge {
        let mut to = 2;
        while index >= self.first_edge_of(to) + to {
            to += 1;
        }
        Edge {
            from: index - self.first_edge_of(to),
            to,
        }
    }

    pub fn edges(&self) -> Vec<Edge> {
        (0..self.num_edges()).map(|e| self.edge(e)).collect()
    }

    /// Column of `op` in this configuration's op list.
    pub fn op_position(&self, op: OperationKind) -> Option<usize> {
        self.ops.iter().position(|&o| o == op)
    }

    pub fn bit_index(&self, edge: usize, op: OperationKind) -> Option<usize> {
        self.op_position(op).map(|p| edge * self.num_ops() + p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_op_order_is_frozen() {
        let names: Vec<_> = OperationKind::ALL.iter().map(|o| o.name()).collect();
        assert_eq!(
            names,
            [
                "none",
                "skip-connect",
                "max-pool-3x3",
                "avg-pool-3x3",
                "sep-conv-3x3",
                "sep-conv-5x5",
                "dil-conv-3x3",
                "dil-conv-5x5"
            ]
        );
        for (i, op) in OperationKind::ALL.iter().enumerate() {
            assert_eq!(op.index(), i);
            assert_eq!(op.name().parse::<OperationKind>().unwrap(), *op);
        }
    }

    #[test]
    fn default_cell_edges() {
        let cfg = CellConfig::default();
        assert_eq!(cfg.num_edges(), 14);
        assert_eq!(cfg.encoding_len(), 112);
        let edges = cfg.edges();
        assert_eq!(edges[0], Edge { from: 0, to: 2 });
        assert_eq!(edges[1], Edge { from: 1, to: 2 });
        assert_eq!(edges[2], Edge { from: 0, to: 3 });
        assert_eq!(edges[4], Edge { from: 2, to: 3 });
        assert_eq!(edges[13], Edge { from: 4, to: 5 });
        for (i, e) in edges.iter().enumerate() {
            assert!(e.from < e.to);
            assert_eq!(cfg.edge_index(e.from, e.to), Some(i));
        }
        assert_eq!(cfg.incoming(5), 9..14);
    }

    #[test]
    fn config_validation() {
        assert!(CellConfig::new(0, OperationKind::ALL.to_vec()).is_err());
        assert!(CellConfig::new(9, OperationKind::ALL.to_vec()).is_err());
        assert!(CellConfig::new(2, vec![OperationKind::SkipConnect]).is_err());
        assert!(CellConfig::new(2, vec![OperationKind::None]).is_err());
        let c = CellConfig::reduced(2, 3).unwrap();
        assert_eq!(c.num_edges(), 5);
        assert_eq!(c.encoding_len(), 20);
    }
}
