//! Same-length 1-D operators over feature vectors: dilated cross-correlation and
//! width-3 pools. Out-of-range taps read zero (convolution) or are skipped (pools);
//! kernels are center-aligned.

use crate::error::{Error, Result};

fn check_span(kernel_len: usize, dilation: usize, len: usize) -> Result<()> {
    if kernel_len == 0 {
        return Err(Error::Empty("conv kernel"));
    }
    if dilation == 0 {
        return Err(Error::Config("conv dilation must be positive".into()));
    }
    let span = (kernel_len - 1) * dilation + 1;
    if span > len {
        return Err(Error::ConvSpan { span, len });
    }
    Ok(())
}

#[inline]
fn tap(t: usize, k: usize, center: usize, dilation: usize, len: usize) -> Option<usize> {
    let pos = t as isize + (k as isize - center as isize) * dilation as isize;
    (0..len as isize).contains(&pos).then_some(pos as usize)
}

/// `y[t] = Σ_k kernel[k] · x[t + (k − c)·dilation]` with `c = (len(kernel) − 1) / 2`.
pub fn conv1d_forward(kernel: &[f64], dilation: usize, x: &[f64]) -> Result<Vec<f64>> {
    check_span(kernel.len(), dilation, x.len())?;
    let center = (kernel.len() - 1) / 2;
    Ok((0..x.len())
        .map(|t| {
            kernel
                .iter()
                .enumerate()
                .filter_map(|(k, w)| tap(t, k, center, dilation, x.len()).map(|p| w * x[p]))
                .sum()
        })
        .collect())
}

/// Returns `(grad_kernel, grad_input)` for `grad_out · conv1d(kernel, x)`.
pub fn conv1d_backward(
    kernel: &[f64],
    dilation: usize,
    x: &[f64],
    grad_out: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_span(kernel.len(), dilation, x.len())?;
    if grad_out.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "conv1d grad_out",
            expected: x.len(),
            found: grad_out.len(),
        });
    }
    let center = (kernel.len() - 1) / 2;
    let mut gk = vec![0.0; kernel.len()];
    let mut gx = vec![0.0; x.len()];
    for (t, &g) in grad_out.iter().enumerate() {
        for (k, &w) in kernel.iter().enumerate() {
            if let Some(p) = tap(t, k, center, dilation, x.len()) {
                gk[k] += g * x[p];
                gx[p] += g * w;
            }
        }
    }
    Ok((gk, gx))
}

fn window(t: usize, len: usize) -> std::ops::Range<usize> {
    t.saturating_sub(1)..(t + 2).min(len)
}

pub fn max_pool3_forward(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| x[window(t, x.len())].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Routes each output gradient to the first maximal element of its window.
pub fn max_pool3_backward(x: &[f64], grad_out: &[f64]) -> Vec<f64> {
    let mut gx = vec![0.0; x.len()];
    for (t, &g) in grad_out.iter().enumerate() {
        let w = window(t, x.len());
        let mut best = w.start;
        for p in w {
            if x[p] > x[best] {
                best = p;
            }
        }
        gx[best] += g;
    }
    gx
}

/// Mean over the in-range elements of each width-3 window (padding excluded).
pub fn avg_pool3_forward(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|t| {
            let w = window(t, x.len());
            let n = w.len() as f64;
            x[w].iter().sum::<f64>() / n
        })
        .collect()
}

pub fn avg_pool3_backward(x_len: usize, grad_out: &[f64]) -> Vec<f64> {
    let mut gx = vec![0.0; x_len];
    for (t, &g) in grad_out.iter().enumerate() {
        let w = window(t, x_len);
        let share = g / w.len() as f64;
        for p in w {
            gx[p] += share;
        }
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernels() {
        let x = [0.5, -1.0, 2.0, 4.0, 3.0];
        assert_eq!(conv1d_forward(&[1.0], 1, &x).unwrap(), x.to_vec());
        assert_eq!(conv1d_forward(&[1.0], 3, &x).unwrap(), x.to_vec());
        assert_eq!(conv1d_forward(&[0.0, 1.0, 0.0], 1, &x).unwrap(), x.to_vec());
        assert_eq!(conv1d_forward(&[0.0, 1.0, 0.0], 2, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn box_filter_with_zero_padding() {
        let y = conv1d_forward(&[1.0 / 3.0; 3], 1, &[3.0, 0.0, 3.0, 0.0]).unwrap();
        for (a, b) in y.iter().zip([1.0, 2.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dilated_taps() {
        // kernel [1, 0, 2] with dilation 2: y[t] = x[t-2] + 2 x[t+2]
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = conv1d_forward(&[1.0, 0.0, 2.0], 2, &x).unwrap();
        assert_eq!(y, vec![6.0, 8.0, 11.0, 2.0, 3.0]);
    }

    #[test]
    fn span_too_long_is_rejected() {
        let err = conv1d_forward(&[1.0; 5], 2, &[0.0; 8]).unwrap_err();
        assert!(matches!(err, Error::ConvSpan { span: 9, len: 8 }));
        assert!(conv1d_forward(&[1.0; 5], 2, &[0.0; 9]).is_ok());
        assert!(conv1d_forward(&[], 1, &[0.0; 9]).is_err());
    }

    #[test]
    fn pools() {
        let x = [1.0, 5.0, 2.0, 0.0];
        assert_eq!(max_pool3_forward(&x), vec![5.0, 5.0, 5.0, 2.0]);
        assert_eq!(avg_pool3_forward(&x), vec![3.0, 8.0 / 3.0, 7.0 / 3.0, 1.0]);
        assert_eq!(max_pool3_backward(&x, &[1.0, 1.0, 1.0, 1.0]), vec![0.0, 3.0, 1.0, 0.0]);
        let g = avg_pool3_backward(4, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(g, vec![0.5, 0.5, 0.0, 0.0]);
    }
}
