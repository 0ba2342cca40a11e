use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CellConfig, OperationKind};
use crate::error::{EncodingError, Error, Result};

/// One preserved edge of a sub-architecture and the operation placed on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    pub from: usize,
    pub to: usize,
    pub op: OperationKind,
}

/// A discrete sub-architecture: two incoming edges per intermediate node, each
/// carrying exactly one non-`none` operation. Selections are kept in edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteArch {
    selections: Vec<Selection>,
}

impl DiscreteArch {
    pub fn new(config: &CellConfig, mut selections: Vec<Selection>) -> Result<Self> {
        for s in &selections {
            if config.edge_index(s.from, s.to).is_none() {
                return Err(Error::InvalidArch(format!(
                    "edge ({}, {}) does not exist in a cell with {} intermediate nodes",
                    s.from,
                    s.to,
                    config.num_intermediate()
                )));
            }
        }
        selections.sort_by_key(|s| (s.to, s.from));
        let arch = Self { selections };
        arch.validate(config)?;
        Ok(arch)
    }

    pub fn validate(&self, config: &CellConfig) -> Result<()> {
        for node in config.intermediate_nodes() {
            let count = self.selections.iter().filter(|s| s.to == node).count();
            if count != 2 {
                return Err(Error::InvalidArch(format!(
                    "node {node} has {count} incoming edges; expected 2"
                )));
            }
        }
        if self.selections.len() != 2 * config.num_intermediate() {
            return Err(Error::InvalidArch(format!(
                "expected {} selected edges, found {}",
                2 * config.num_intermediate(),
                self.selections.len()
            )));
        }
        for w in self.selections.windows(2) {
            if (w[0].from, w[0].to) == (w[1].from, w[1].to) {
                return Err(Error::InvalidArch(format!(
                    "edge ({}, {}) selected twice",
                    w[0].from, w[0].to
                )));
            }
        }
        for s in &self.selections {
            if config.edge_index(s.from, s.to).is_none() {
                return Err(Error::InvalidArch(format!("edge ({}, {}) out of range", s.from, s.to)));
            }
            if s.op == OperationKind::None {
                return Err(Error::InvalidArch(format!(
                    "edge ({}, {}) selects `none`",
                    s.from, s.to
                )));
            }
            if config.op_position(s.op).is_none() {
                return Err(Error::InvalidArch(format!(
                    "operation {} is not part of this cell's op list",
                    s.op
                )));
            }
        }
        Ok(())
    }

    pub fn selections(&self) -> &[Selection] {
        &self.selections
    }

    pub fn ops(&self) -> impl Iterator<Item = OperationKind> + '_ {
        self.selections.iter().map(|s| s.op)
    }

    /// Number of edges on the longest directed path through the selected edges, from an
    /// input node to any intermediate node.
    pub fn depth(&self) -> usize {
        let nodes = self.selections.iter().map(|s| s.to + 1).max().unwrap_or(2);
        let mut depth = vec![0usize; nodes];
        // selections are sorted by destination, so sources are final before use
        for s in &self.selections {
            depth[s.to] = depth[s.to].max(depth[s.from] + 1);
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Selected edges whose source is an intermediate node.
    pub fn intermediate_sourced_edges(&self) -> usize {
        self.selections.iter().filter(|s| s.from >= 2).count()
    }
}

/// Bit-vector form of a [`DiscreteArch`]; text form is a string of `0`/`1` in bit order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Encoding {
    bits: Vec<bool>,
}

impl Encoding {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses the text form, checking length and alphabet only.
    pub fn parse(text: &str, config: &CellConfig) -> Result<Self, EncodingError> {
        let text = text.trim();
        let expected = config.encoding_len();
        let found = text.chars().count();
        if found != expected {
            return Err(EncodingError::WrongLength { expected, found });
        }
        let bits = text
            .chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(EncodingError::BadCharacter { position, found }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn set_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn write_f64(&self, out: &mut [f64]) {
        for (o, &b) in out.iter_mut().zip(&self.bits) {
            *o = if b { 1.0 } else { 0.0 };
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

pub fn encode(arch: &DiscreteArch, config: &CellConfig) -> Result<Encoding> {
    arch.validate(config)?;
    let mut bits = vec![false; config.encoding_len()];
    for s in arch.selections() {
        let edge = config.edge_index(s.from, s.to).expect("validated edge");
        let bit = config.bit_index(edge, s.op).expect("validated op");
        bits[bit] = true;
    }
    Ok(Encoding { bits })
}

/// Decodes and validates an encoding. Checks run in a fixed order (length, total set
/// bits, bits per edge, edges per node, `none` bits) and the first violation is
/// reported.
pub fn decode(enc: &Encoding, config: &CellConfig) -> Result<DiscreteArch, EncodingError> {
    let expected_len = config.encoding_len();
    if enc.len() != expected_len {
        return Err(EncodingError::WrongLength {
            expected: expected_len,
            found: enc.len(),
        });
    }
    let expected_set = 2 * config.num_intermediate();
    let found_set = enc.bits.iter().filter(|&&b| b).count();
    if found_set != expected_set {
        return Err(EncodingError::SetBitCount {
            expected: expected_set,
            found: found_set,
        });
    }
    let num_ops = config.num_ops();
    let mut chosen: Vec<Option<usize>> = vec![None; config.num_edges()];
    for (edge, row) in enc.bits.chunks_exact(num_ops).enumerate() {
        let set: Vec<usize> = row
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        if set.len() > 1 {
            return Err(EncodingError::MultipleOpsOnEdge {
                edge,
                found: set.len(),
            });
        }
        chosen[edge] = set.first().copied();
    }
    for node in config.intermediate_nodes() {
        let found = config.incoming(node).filter(|&e| chosen[e].is_some()).count();
        if found != 2 {
            return Err(EncodingError::EdgesPerNode { node, found });
        }
    }
    let mut selections = Vec::with_capacity(expected_set);
    for (edge, op) in chosen.iter().enumerate() {
        if let Some(pos) = *op {
            let op = config.ops()[pos];
            if op == OperationKind::None {
                return Err(EncodingError::NoneSelected { edge });
            }
            let e = config.edge(edge);
            selections.push(Selection {
                from: e.from,
                to: e.to,
                op,
            });
        }
    }
    Ok(DiscreteArch { selections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use OperationKind::*;

    fn sel(from: usize, to: usize, op: OperationKind) -> Selection {
        Selection { from, to, op }
    }

    fn example_arch() -> DiscreteArch {
        DiscreteArch::new(
            &CellConfig::default(),
            vec![
                sel(0, 2, SkipConnect),
                sel(1, 2, SepConv3x3),
                sel(0, 3, SepConv3x3),
                sel(2, 3, DilConv3x3),
                sel(0, 4, MaxPool3x3),
                sel(1, 4, SkipConnect),
                sel(2, 5, SepConv5x5),
                sel(4, 5, AvgPool3x3),
            ],
        )
        .unwrap()
    }

    #[test]
    fn encodes_to_frozen_bit_indices() {
        let cfg = CellConfig::default();
        let enc = encode(&example_arch(), &cfg).unwrap();
        assert_eq!(enc.set_indices(), vec![1, 12, 20, 38, 42, 49, 93, 107]);
        assert_eq!(decode(&enc, &cfg).unwrap(), example_arch());
        let text = enc.to_string();
        assert_eq!(text.len(), 112);
        assert_eq!(Encoding::parse(&text, &cfg).unwrap(), enc);
    }

    #[test]
    fn all_zero_bits_rejected() {
        let cfg = CellConfig::default();
        let err = decode(&Encoding::from_bits(vec![false; 112]), &cfg).unwrap_err();
        assert_eq!(err.to_string(), "expected 8 set bits, found 0");
    }

    #[test]
    fn each_invalid_class_has_its_own_error() {
        let cfg = CellConfig::default();
        let good = encode(&example_arch(), &cfg).unwrap();

        let short = Encoding::parse(&"0".repeat(111), &cfg).unwrap_err();
        assert_eq!(short, EncodingError::WrongLength { expected: 112, found: 111 });
        assert!(matches!(
            Encoding::parse(&format!("{}2", "0".repeat(111)), &cfg),
            Err(EncodingError::BadCharacter { position: 111, .. })
        ));

        // two ops on edge 0: move bit 12 (edge 1) onto edge 0, op 2
        let mut bits = good.bits().to_vec();
        bits[12] = false;
        bits[2] = true;
        assert_eq!(
            decode(&Encoding::from_bits(bits), &cfg).unwrap_err(),
            EncodingError::MultipleOpsOnEdge { edge: 0, found: 2 }
        );

        // move edge (1,4) onto edge (1,3): node 3 gets 3 edges, node 4 gets 1
        let mut bits = good.bits().to_vec();
        bits[49] = false;
        bits[3 * 8 + 1] = true;
        assert_eq!(
            decode(&Encoding::from_bits(bits), &cfg).unwrap_err(),
            EncodingError::EdgesPerNode { node: 3, found: 3 }
        );

        // swap skip on edge 0 for none
        let mut bits = good.bits().to_vec();
        bits[1] = false;
        bits[0] = true;
        assert_eq!(
            decode(&Encoding::from_bits(bits), &cfg).unwrap_err(),
            EncodingError::NoneSelected { edge: 0 }
        );
    }

    #[test]
    fn arch_validation() {
        let cfg = CellConfig::default();
        let mut s = example_arch().selections().to_vec();
        s[0].op = None;
        assert!(DiscreteArch::new(&cfg, s).is_err());
        let mut s = example_arch().selections().to_vec();
        s.pop();
        assert!(DiscreteArch::new(&cfg, s).is_err());
        let mut s = example_arch().selections().to_vec();
        s[1] = s[0];
        assert!(DiscreteArch::new(&cfg, s).is_err());
        let mut s = example_arch().selections().to_vec();
        s[0] = sel(3, 2, SkipConnect);
        assert!(DiscreteArch::new(&cfg, s).is_err());
    }

    #[test]
    fn depth_and_memory_edges() {
        let a = example_arch();
        // 0 -> 2 -> 3, 2 -> 5, 4 -> 5 with 4 fed by inputs
        assert_eq!(a.depth(), 2);
        assert_eq!(a.intermediate_sourced_edges(), 3);
    }
}
