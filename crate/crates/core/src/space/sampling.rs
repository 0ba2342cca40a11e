use super::{CellConfig, DiscreteArch, NormalizedParams, Selection};
use crate::error::{Error, Result};
use crate::numeric::Rng;

const DEGENERATE_MASS: f64 = 1e-12;

/// Draws a sub-architecture: for every intermediate node two incoming edges uniformly
/// without replacement, then on each chosen edge an operation from that edge's weights
/// with `none` removed and the rest renormalized.
pub fn sample_subarch(
    alpha_tilde: &NormalizedParams,
    config: &CellConfig,
    rng: &mut Rng,
) -> Result<DiscreteArch> {
    alpha_tilde.check_config(config)?;
    let mut selections = Vec::with_capacity(2 * config.num_intermediate());
    for node in config.intermediate_nodes() {
        let first = rng.below(node);
        let mut second = rng.below(node - 1);
        if second >= first {
            second += 1;
        }
        let (a, b) = if first < second { (first, second) } else { (second, first) };
        for from in [a, b] {
            let edge = config.edge_index(from, node).expect("edge in range");
            let row = &alpha_tilde.row(edge)[1..];
            if row.iter().sum::<f64>() <= DEGENERATE_MASS {
                return Err(Error::DegenerateEdge { edge });
            }
            let pos = rng
                .weighted_index(row)
                .ok_or(Error::DegenerateEdge { edge })?;
            selections.push(Selection {
                from,
                to: node,
                op: config.ops()[pos + 1],
            });
        }
    }
    DiscreteArch::new(config, selections)
}

/// Uniform over edge selections and non-`none` operations.
pub fn sample_uniform_arch(config: &CellConfig, rng: &mut Rng) -> DiscreteArch {
    sample_subarch(&NormalizedParams::uniform(config), config, rng)
        .expect("uniform weights are never degenerate")
}

/// Keeps, for each intermediate node, the two incoming edges with the largest
/// non-`none` weight and places the argmax non-`none` op on each. Ties go to the lower
/// edge index, then the lower op index.
pub fn discretize(alpha_tilde: &NormalizedParams, config: &CellConfig) -> Result<DiscreteArch> {
    alpha_tilde.check_config(config)?;
    let mut selections = Vec::with_capacity(2 * config.num_intermediate());
    for node in config.intermediate_nodes() {
        let mut best: Vec<(usize, f64, usize)> = config
            .incoming(node)
            .map(|edge| {
                let row = alpha_tilde.row(edge);
                let mut arg = 1;
                for op in 2..row.len() {
                    if row[op] > row[arg] {
                        arg = op;
                    }
                }
                (edge, row[arg], arg)
            })
            .collect();
        // stable sort keeps lower edge index first among equal weights
        best.sort_by(|a, b| b.1.total_cmp(&a.1));
        for &(edge, _, op) in &best[..2] {
            let e = config.edge(edge);
            selections.push(Selection {
                from: e.from,
                to: e.to,
                op: config.ops()[op],
            });
        }
    }
    DiscreteArch::new(config, selections)
}
