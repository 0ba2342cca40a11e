use super::CellConfig;
use crate::error::{Error, Result};
use crate::numeric::{softmax, softmax_vjp};

/// Unnormalized architectural logits, one row per edge and one column per op.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchParams {
    num_edges: usize,
    num_ops: usize,
    values: Vec<f64>,
}

impl ArchParams {
    pub fn zeros(config: &CellConfig) -> Self {
        Self {
            num_edges: config.num_edges(),
            num_ops: config.num_ops(),
            values: vec![0.0; config.encoding_len()],
        }
    }

    pub fn from_values(config: &CellConfig, values: Vec<f64>) -> Result<Self> {
        if values.len() != config.encoding_len() {
            return Err(Error::DimensionMismatch {
                context: "architectural parameters",
                expected: config.encoding_len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("architectural parameters".into()));
        }
        Ok(Self {
            num_edges: config.num_edges(),
            num_ops: config.num_ops(),
            values,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_ops(&self) -> usize {
        self.num_ops
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, edge: usize) -> &[f64] {
        &self.values[edge * self.num_ops..(edge + 1) * self.num_ops]
    }

    pub fn row_mut(&mut self, edge: usize) -> &mut [f64] {
        &mut self.values[edge * self.num_ops..(edge + 1) * self.num_ops]
    }

    /// Row-wise softmax.
    pub fn normalize(&self) -> Result<NormalizedParams> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("architectural parameters".into()));
        }
        let probs = self
            .values
            .chunks_exact(self.num_ops)
            .flat_map(softmax)
            .collect();
        Ok(NormalizedParams {
            num_edges: self.num_edges,
            num_ops: self.num_ops,
            probs,
        })
    }
}

/// Row-stochastic operation weights per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedParams {
    num_edges: usize,
    num_ops: usize,
    probs: Vec<f64>,
}

impl NormalizedParams {
    pub fn uniform(config: &CellConfig) -> Self {
        let n = config.num_ops();
        Self {
            num_edges: config.num_edges(),
            num_ops: n,
            probs: vec![1.0 / n as f64; config.encoding_len()],
        }
    }

    /// Builds from explicit rows, checking each sums to one within 1e-9 and has no
    /// negative entries. Zeros are accepted so degenerate distributions can be
    /// expressed.
    pub fn from_probs(config: &CellConfig, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != config.encoding_len() {
            return Err(Error::DimensionMismatch {
                context: "normalized parameters",
                expected: config.encoding_len(),
                found: probs.len(),
            });
        }
        for (edge, row) in probs.chunks_exact(config.num_ops()).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "row {edge} of normalized parameters is not a probability vector"
                )));
            }
        }
        Ok(Self {
            num_edges: config.num_edges(),
            num_ops: config.num_ops(),
            probs,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_ops(&self) -> usize {
        self.num_ops
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, edge: usize) -> &[f64] {
        &self.probs[edge * self.num_ops..(edge + 1) * self.num_ops]
    }

    pub fn check_config(&self, config: &CellConfig) -> Result<()> {
        if self.num_edges != config.num_edges() || self.num_ops != config.num_ops() {
            return Err(Error::DimensionMismatch {
                context: "normalized parameters vs cell",
                expected: config.encoding_len(),
                found: self.probs.len(),
            });
        }
        Ok(())
    }

    /// Pulls a gradient with respect to the weights back to the logits, row by row.
    pub fn vjp(&self, grad: &[f64]) -> Result<Vec<f64>> {
        if grad.len() != self.probs.len() {
            return Err(Error::DimensionMismatch {
                context: "gradient w.r.t. normalized parameters",
                expected: self.probs.len(),
                found: grad.len(),
            });
        }
        Ok(self
            .probs
            .chunks_exact(self.num_ops)
            .zip(grad.chunks_exact(self.num_ops))
            .flat_map(|(p, g)| softmax_vjp(p, g))
            .collect())
    }
}

/// Straight-through gradient: the bit gradient is passed unchanged to the normalized
/// weights at every position (including unsampled edges), then chained through the
/// row softmax to the logits.
pub fn encoding_grad_to_alpha(grad_bits: &[f64], alpha_tilde: &NormalizedParams) -> Result<Vec<f64>> {
    alpha_tilde.vjp(grad_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logits_normalize_to_uniform() {
        let cfg = CellConfig::default();
        let n = ArchParams::zeros(&cfg).normalize().unwrap();
        assert!(n.probs().iter().all(|&p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn ln7_row() {
        let cfg = CellConfig::default();
        let mut a = ArchParams::zeros(&cfg);
        let c = -3.5;
        a.row_mut(3).iter_mut().for_each(|v| *v = c);
        a.row_mut(3)[5] = c + 7f64.ln();
        let n = a.normalize().unwrap();
        for (i, &p) in n.row(3).iter().enumerate() {
            let expect = if i == 5 { 0.5 } else { 1.0 / 14.0 };
            assert!((p - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let cfg = CellConfig::default();
        let mut v = vec![0.0; 112];
        v[7] = f64::INFINITY;
        assert!(ArchParams::from_values(&cfg, v).is_err());
        let mut a = ArchParams::zeros(&cfg);
        a.values_mut()[0] = f64::NAN;
        assert!(a.normalize().is_err());
    }

    #[test]
    fn straight_through_uniform_row() {
        let cfg = CellConfig::default();
        let n = NormalizedParams::uniform(&cfg);
        let mut g = vec![0.0; 112];
        g[16] = 1.0; // edge 2, op 0
        let ga = encoding_grad_to_alpha(&g, &n).unwrap();
        for op in 0..8 {
            let e0 = if op == 0 { 1.0 } else { 0.0 };
            let expect = (e0 - 1.0 / 8.0) / 8.0;
            assert!((ga[16 + op] - expect).abs() < 1e-15);
        }
        assert!(ga[..16].iter().chain(&ga[24..]).all(|&v| v == 0.0));
        assert!(encoding_grad_to_alpha(&[0.0; 111], &n).is_err());
        assert!(encoding_grad_to_alpha(&[0.0; 112], &n).unwrap().iter().all(|&v| v == 0.0));
    }
}
