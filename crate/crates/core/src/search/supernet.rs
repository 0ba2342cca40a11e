use crate::error::{Error, Result};
use crate::numeric::{
    avg_pool3_backward, avg_pool3_forward, conv1d_backward, conv1d_forward, cross_entropy,
    max_pool3_backward, max_pool3_forward, Rng,
};
use crate::space::{CellConfig, NormalizedParams, OperationKind};

/// Kernel size and dilation of the learnable proxy operations.
fn conv_shape(op: OperationKind) -> Option<(usize, usize)> {
    match op {
        OperationKind::SepConv3x3 => Some((3, 1)),
        OperationKind::SepConv5x5 => Some((5, 1)),
        OperationKind::DilConv3x3 => Some((3, 2)),
        OperationKind::DilConv5x5 => Some((5, 2)),
        _ => None,
    }
}

/// Weight-sharing network over the whole cell.
///
/// Two affine stems map the input to nodes 0 and 1. Every edge holds a mixture of all
/// operations weighted by α̃, each intermediate node sums its incoming edges and the
/// concatenated intermediate nodes feed a linear classifier. All parameters live in
/// one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Supernet {
    config: CellConfig,
    dim: usize,
    num_classes: usize,
    params: Vec<f64>,
    /// Offset of the kernel of each (edge, op position); `None` for parameter-free ops.
    kernels: Vec<Option<usize>>,
    head: usize,
}

/// Loss, gradients and predicted classes for one batch.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub loss: f64,
    pub grad_params: Vec<f64>,
    /// Gradient with respect to α̃, laid out like the encoding.
    pub grad_alpha_tilde: Vec<f64>,
    pub predictions: Vec<usize>,
}

struct Trace {
    states: Vec<Vec<f64>>,
    /// Output of every (edge, op position); empty for `none`.
    outs: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

impl Supernet {
    pub fn new(config: &CellConfig, dim: usize, num_classes: usize, rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(config, dim, num_classes)?;
        let stem = (3.0 / dim as f64).sqrt();
        for i in 0..2 {
            let w = i * (dim * dim + dim);
            for v in &mut net.params[w..w + dim * dim] {
                *v = rng.uniform_range(-stem, stem);
            }
        }
        for (pos, off) in net.kernels.iter().enumerate() {
            if let Some(off) = *off {
                let op = config.ops()[pos % config.num_ops()];
                let (k, _) = conv_shape(op).expect("kernel slot for conv op");
                let bound = (3.0 / k as f64).sqrt();
                for v in &mut net.params[off..off + k] {
                    *v = rng.uniform_range(-bound, bound);
                }
            }
        }
        let fan_in = config.num_intermediate() * dim;
        let bound = (6.0 / (fan_in + num_classes) as f64).sqrt();
        let head = net.head;
        for v in &mut net.params[head..head + fan_in * num_classes] {
            *v = rng.uniform_range(-bound, bound);
        }
        Ok(net)
    }

    pub fn zeros(config: &CellConfig, dim: usize, num_classes: usize) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::Config("supernet needs positive dim and class count".into()));
        }
        let mut offset = 2 * (dim * dim + dim);
        let mut kernels = Vec::with_capacity(config.encoding_len());
        for _ in 0..config.num_edges() {
            for &op in config.ops() {
                kernels.push(conv_shape(op).map(|(k, dil)| {
                    let o = offset;
                    offset += k;
                    debug_assert!(dil * (k - 1) < dim.max(dil * (k - 1) + 1));
                    o
                }));
            }
        }
        for &op in config.ops() {
            if let Some((k, dil)) = conv_shape(op) {
                if dil * (k - 1) + 1 > dim {
                    return Err(Error::ConvSpan {
                        span: dil * (k - 1) + 1,
                        len: dim,
                    });
                }
            }
        }
        let head = offset;
        let n = head + num_classes * config.num_intermediate() * dim + num_classes;
        Ok(Self {
            config: config.clone(),
            dim,
            num_classes,
            params: vec![0.0; n],
            kernels,
            head,
        })
    }

    pub fn config(&self) -> &CellConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn head_in(&self) -> usize {
        self.config.num_intermediate() * self.dim
    }

    fn forward_one(&self, alpha: &NormalizedParams, x: &[f64]) -> Result<Trace> {
        let d = self.dim;
        let mut states = Vec::with_capacity(self.config.num_nodes());
        for s in 0..2 {
            let w = &self.params[s * (d * d + d)..];
            let (w, b) = (&w[..d * d], &w[d * d..d * d + d]);
            states.push(
                w.chunks_exact(d)
                    .zip(b)
                    .map(|(row, b)| row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
                    .collect::<Vec<_>>(),
            );
        }
        let num_ops = self.config.num_ops();
        let mut outs = vec![Vec::new(); self.config.encoding_len()];
        for j in self.config.intermediate_nodes() {
            let mut node = vec![0.0; d];
            for e in self.config.incoming(j) {
                let src = &states[self.config.edge(e).from];
                let p = alpha.row(e);
                for (pos, &op) in self.config.ops().iter().enumerate() {
                    let slot = e * num_ops + pos;
                    let y = match op {
                        OperationKind::None => continue,
                        OperationKind::SkipConnect => src.clone(),
                        OperationKind::MaxPool3x3 => max_pool3_forward(src),
                        OperationKind::AvgPool3x3 => avg_pool3_forward(src),
                        _ => {
                            let (k, dil) = conv_shape(op).expect("conv op");
                            let off = self.kernels[slot].expect("conv kernel");
                            let mut y = conv1d_forward(&self.params[off..off + k], dil, src)?;
                            y.iter_mut().for_each(|v| *v = v.tanh());
                            y
                        }
                    };
                    for (n, v) in node.iter_mut().zip(&y) {
                        *n += p[pos] * v;
                    }
                    outs[slot] = y;
                }
            }
            states.push(node);
        }
        let hin = self.head_in();
        let w = &self.params[self.head..self.head + self.num_classes * hin];
        let b = &self.params[self.head + self.num_classes * hin..];
        let h: Vec<f64> = states[2..].concat();
        let logits = w
            .chunks_exact(hin)
            .zip(b)
            .map(|(row, b)| row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect();
        Ok(Trace { states, outs, logits })
    }

    fn check_batch(&self, alpha: &NormalizedParams, inputs: &[f64], labels: &[usize]) -> Result<()> {
        alpha.check_config(&self.config)?;
        if labels.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if inputs.len() != labels.len() * self.dim {
            return Err(Error::DimensionMismatch {
                context: "supernet batch inputs",
                expected: labels.len() * self.dim,
                found: inputs.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::Config(format!("label {l} out of range for {} classes", self.num_classes)));
        }
        Ok(())
    }

    /// Mean cross-entropy and predicted classes, without gradients.
    pub fn forward(&self, alpha: &NormalizedParams, inputs: &[f64], labels: &[usize]) -> Result<(f64, Vec<usize>)> {
        self.check_batch(alpha, inputs, labels)?;
        let mut loss = 0.0;
        let mut preds = Vec::with_capacity(labels.len());
        for (x, &y) in inputs.chunks_exact(self.dim).zip(labels) {
            let t = self.forward_one(alpha, x)?;
            loss += cross_entropy(&t.logits, y).0;
            preds.push(argmax(&t.logits));
        }
        Ok((loss / labels.len() as f64, preds))
    }

    /// Mean cross-entropy with gradients for the weights and for α̃.
    pub fn forward_backward(&self, alpha: &NormalizedParams, inputs: &[f64], labels: &[usize]) -> Result<BatchResult> {
        self.check_batch(alpha, inputs, labels)?;
        let d = self.dim;
        let num_ops = self.config.num_ops();
        let hin = self.head_in();
        let scale = 1.0 / labels.len() as f64;
        let mut gp = vec![0.0; self.params.len()];
        let mut ga = vec![0.0; self.config.encoding_len()];
        let mut loss = 0.0;
        let mut preds = Vec::with_capacity(labels.len());

        for (x, &y) in inputs.chunks_exact(d).zip(labels) {
            let t = self.forward_one(alpha, x)?;
            let (l, mut g_logits) = cross_entropy(&t.logits, y);
            loss += l;
            preds.push(argmax(&t.logits));
            g_logits.iter_mut().for_each(|g| *g *= scale);

            let mut g_states = vec![vec![0.0; d]; self.config.num_nodes()];
            let w = &self.params[self.head..self.head + self.num_classes * hin];
            for (c, &g) in g_logits.iter().enumerate() {
                let row = &w[c * hin..(c + 1) * hin];
                let grow = &mut gp[self.head + c * hin..self.head + (c + 1) * hin];
                for (k, (gw, &wv)) in grow.iter_mut().zip(row).enumerate() {
                    let (node, i) = (2 + k / d, k % d);
                    *gw += g * t.states[node][i];
                    g_states[node][i] += g * wv;
                }
                gp[self.head + self.num_classes * hin + c] += g;
            }

            for j in self.config.intermediate_nodes().rev() {
                let g_node = std::mem::take(&mut g_states[j]);
                for e in self.config.incoming(j) {
                    let from = self.config.edge(e).from;
                    let src = &t.states[from];
                    let p = alpha.row(e);
                    for (pos, &op) in self.config.ops().iter().enumerate() {
                        if op == OperationKind::None {
                            continue;
                        }
                        let slot = e * num_ops + pos;
                        let out = &t.outs[slot];
                        ga[slot] += g_node.iter().zip(out).map(|(g, o)| g * o).sum::<f64>();
                        if p[pos] == 0.0 {
                            continue;
                        }
                        let g_out: Vec<f64> = g_node.iter().map(|g| g * p[pos]).collect();
                        let g_src = match op {
                            OperationKind::None => unreachable!(),
                            OperationKind::SkipConnect => g_out,
                            OperationKind::MaxPool3x3 => max_pool3_backward(src, &g_out),
                            OperationKind::AvgPool3x3 => avg_pool3_backward(d, &g_out),
                            _ => {
                                let (k, dil) = conv_shape(op).expect("conv op");
                                let off = self.kernels[slot].expect("conv kernel");
                                let g_pre: Vec<f64> =
                                    g_out.iter().zip(out).map(|(g, y)| g * (1.0 - y * y)).collect();
                                let (g_k, g_x) = conv1d_backward(&self.params[off..off + k], dil, src, &g_pre)?;
                                for (a, b) in gp[off..off + k].iter_mut().zip(&g_k) {
                                    *a += b;
                                }
                                g_x
                            }
                        };
                        for (a, b) in g_states[from].iter_mut().zip(&g_src) {
                            *a += b;
                        }
                    }
                }
            }

            for (s, states) in g_states.iter().enumerate().take(2) {
                let base = s * (d * d + d);
                for (o, &g) in states.iter().enumerate() {
                    for (gw, xv) in gp[base + o * d..base + (o + 1) * d].iter_mut().zip(x) {
                        *gw += g * xv;
                    }
                    gp[base + d * d + o] += g;
                }
            }
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite("supernet loss".into()));
        }
        Ok(BatchResult {
            loss,
            grad_params: gp,
            grad_alpha_tilde: ga,
            predictions: preds,
        })
    }

    pub fn accuracy(&self, alpha: &NormalizedParams, inputs: &[f64], labels: &[usize]) -> Result<f64> {
        let (_, preds) = self.forward(alpha, inputs, labels)?;
        let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(config: &CellConfig, op: OperationKind) -> NormalizedParams {
        let pos = config.op_position(op).unwrap();
        let probs = (0..config.encoding_len())
            .map(|i| if i % config.num_ops() == pos { 1.0 } else { 0.0 })
            .collect();
        NormalizedParams::from_probs(config, probs).unwrap()
    }

    #[test]
    fn all_none_gives_uniform_logits() {
        let cfg = CellConfig::default();
        let net = Supernet::new(&cfg, 16, 4, &mut Rng::new(0)).unwrap();
        let x: Vec<f64> = (0..32).map(|i| i as f64 * 0.1).collect();
        let (loss, _) = net.forward(&one_hot(&cfg, OperationKind::None), &x, &[0, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_skip_propagates_linearly() {
        let cfg = CellConfig::default();
        let net = Supernet::new(&cfg, 16, 4, &mut Rng::new(1)).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        let t = net.forward_one(&one_hot(&cfg, OperationKind::SkipConnect), &x).unwrap();
        for j in cfg.intermediate_nodes() {
            for i in 0..16 {
                let want: f64 = (0..j).map(|s| t.states[s][i]).sum();
                assert!((t.states[j][i] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oversized_kernel_span_is_rejected() {
        let cfg = CellConfig::default();
        assert!(matches!(Supernet::zeros(&cfg, 8, 4), Err(Error::ConvSpan { span: 9, len: 8 })));
    }

    #[test]
    fn mismatched_batch_is_rejected() {
        let cfg = CellConfig::default();
        let net = Supernet::zeros(&cfg, 16, 4).unwrap();
        let a = NormalizedParams::uniform(&cfg);
        assert!(net.forward(&a, &[0.0; 15], &[0]).is_err());
        assert!(net.forward(&a, &[0.0; 16], &[4]).is_err());
    }
}
