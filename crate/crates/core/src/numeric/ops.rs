use crate::error::{Error, Result};

/// Numerically stable softmax; the maximum is subtracted before exponentiation.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Vector-Jacobian product of softmax at output `p`: `p ⊙ (g − p·g)`.
pub fn softmax_vjp(p: &[f64], grad_out: &[f64]) -> Vec<f64> {
    debug_assert_eq!(p.len(), grad_out.len());
    let dot: f64 = p.iter().zip(grad_out).map(|(a, b)| a * b).sum();
    p.iter().zip(grad_out).map(|(&pi, &gi)| pi * (gi - dot)).collect()
}

/// Softmax cross-entropy for one sample. Returns the loss and its gradient with respect
/// to the logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    (lse - logits[label], grad)
}

/// Mean squared error and its gradient `2 (pred − target) / n`.
pub fn mse(preds: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if preds.is_empty() {
        return Err(Error::Empty("mse inputs"));
    }
    if preds.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            context: "mse targets",
            expected: preds.len(),
            found: targets.len(),
        });
    }
    let n = preds.len() as f64;
    let mut loss = 0.0;
    let grad = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}
