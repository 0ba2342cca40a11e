use super::{CellConfig, DiscreteArch, Selection};
use crate::error::{Error, Result};

fn choose2(n: u128) -> u128 {
    n * (n - 1) / 2
}

/// Exact number of distinct cells: `Π_j C(j, 2) · k^(2·num_intermediate)`.
pub fn space_size(config: &CellConfig, ops_excluding_none: u32) -> Result<u128> {
    let mut total: u128 = 1;
    for node in config.intermediate_nodes() {
        total = total.checked_mul(choose2(node as u128)).ok_or(Error::Overflow)?;
    }
    let ops = (ops_excluding_none as u128)
        .checked_pow(2 * config.num_intermediate() as u32)
        .ok_or(Error::Overflow)?;
    total.checked_mul(ops).ok_or(Error::Overflow)
}

/// Every valid choice of two incoming edges per intermediate node, as lists of
/// `(from, to)` pairs in edge order.
pub fn enumerate_edge_selections(config: &CellConfig) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for node in config.intermediate_nodes() {
        let mut next = Vec::new();
        for partial in &out {
            for a in 0..node {
                for b in a + 1..node {
                    let mut p = partial.clone();
                    p.push((a, node));
                    p.push((b, node));
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

/// Every valid sub-architecture of `config`. Intended for reduced spaces.
pub fn enumerate_archs(config: &CellConfig) -> Vec<DiscreteArch> {
    let ops = &config.ops()[1..];
    let mut out = Vec::new();
    for edges in enumerate_edge_selections(config) {
        let n = edges.len();
        let mut idx = vec![0usize; n];
        loop {
            let selections = edges
                .iter()
                .zip(&idx)
                .map(|(&(from, to), &i)| Selection { from, to, op: ops[i] })
                .collect();
            out.push(DiscreteArch::new(config, selections).expect("enumerated arch is valid"));
            // odometer increment
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < ops.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn default_space_size() {
        let cfg = CellConfig::default();
        assert_eq!(space_size(&cfg, 7).unwrap(), 1_037_664_180);
        assert_eq!(enumerate_edge_selections(&cfg).len(), 180);
        assert_eq!(enumerate_edge_selections(&cfg).len() as u128 * 7u128.pow(8), 1_037_664_180);
    }

    #[test]
    fn small_spaces_match_enumeration() {
        assert_eq!(space_size(&CellConfig::reduced(1, 1).unwrap(), 1).unwrap(), 1);
        for n in 1..=2 {
            for k in 1..=3 {
                let cfg = CellConfig::reduced(n, k).unwrap();
                let archs = enumerate_archs(&cfg);
                let distinct: HashSet<_> = archs.iter().cloned().collect();
                assert_eq!(distinct.len(), archs.len());
                assert_eq!(space_size(&cfg, k as u32).unwrap(), archs.len() as u128, "n={n} k={k}");
            }
        }
        assert_eq!(enumerate_archs(&CellConfig::reduced(2, 2).unwrap()).len(), 48);
    }

    #[test]
    fn largest_supported_cell_does_not_overflow() {
        let cfg = CellConfig::new(8, crate::space::OperationKind::ALL.to_vec()).unwrap();
        assert!(space_size(&cfg, 7).is_ok());
    }
}
