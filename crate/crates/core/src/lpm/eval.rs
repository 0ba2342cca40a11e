use serde::{Deserialize, Serialize};

use super::Lpm;
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::oracle::LatencyDataset;
use crate::space::CellConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mean_absolute_error_ms: f64,
    pub mean_relative_error: f64,
    pub kendall_tau: f64,
    pub concordant_fraction: f64,
    pub ties: u64,
    pub n_test: usize,
    pub n_pairs_sampled: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallStats {
    pub tau: f64,
    pub concordant_fraction: f64,
    pub concordant: u64,
    pub discordant: u64,
    pub ties: u64,
}

/// Kendall τ-a. A pair tied in either sequence counts as neither concordant nor
/// discordant. Without ties the concordant fraction is reported as `(τ + 1) / 2`.
pub fn kendall_tau(truth: &[f64], pred: &[f64]) -> Result<KendallStats> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            context: "kendall tau",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(Error::Config("Kendall tau needs at least 2 points".into()));
    }
    let (mut concordant, mut discordant, mut ties) = (0u64, 0u64, 0u64);
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            let s = (truth[i] - truth[j]) * (pred[i] - pred[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            } else {
                ties += 1;
            }
        }
    }
    let total = (concordant + discordant + ties) as f64;
    let tau = (concordant as f64 - discordant as f64) / total;
    let concordant_fraction = if ties == 0 {
        (tau + 1.0) / 2.0
    } else {
        concordant as f64 / total
    };
    if ties == 0 {
        assert_eq!(concordant_fraction, (tau + 1.0) / 2.0);
    }
    Ok(KendallStats {
        tau,
        concordant_fraction,
        concordant,
        discordant,
        ties,
    })
}

/// Error metrics over all points and Kendall-τ over a seeded sample of
/// `pair_sample` points (all points when the set is smaller).
pub fn evaluate_predictions(truth: &[f64], pred: &[f64], pair_sample: usize, rng: &mut Rng) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            context: "evaluation predictions",
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pair_sample < 2 {
        return Err(Error::Config(format!("pair sample must be at least 2, got {pair_sample}")));
    }
    if let Some(t) = truth.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Dataset(format!("true latency must be positive, got {t}")));
    }
    if let Some(p) = pred.iter().find(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("prediction {p}")));
    }
    let n = truth.len() as f64;
    let mae = truth.iter().zip(pred).map(|(t, p)| (p - t).abs()).sum::<f64>() / n;
    let mre = truth.iter().zip(pred).map(|(t, p)| (p - t).abs() / t).sum::<f64>() / n;

    let mut idx: Vec<usize> = (0..truth.len()).collect();
    if pair_sample < idx.len() {
        rng.shuffle(&mut idx);
        idx.truncate(pair_sample);
        idx.sort_unstable();
    }
    let st: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
    let sp: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let k = kendall_tau(&st, &sp)?;
    Ok(EvalReport {
        mean_absolute_error_ms: mae,
        mean_relative_error: mre,
        kendall_tau: k.tau,
        concordant_fraction: k.concordant_fraction,
        ties: k.ties,
        n_test: truth.len(),
        n_pairs_sampled: idx.len(),
    })
}

pub fn evaluate(
    lpm: &Lpm,
    test: &LatencyDataset,
    config: &CellConfig,
    pair_sample: usize,
    rng: &mut Rng,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    if lpm.input_dim() != config.encoding_len() {
        return Err(Error::DimensionMismatch {
            context: "model input vs dataset encoding",
            expected: lpm.input_dim(),
            found: config.encoding_len(),
        });
    }
    let (xs, ys) = test.inputs(config)?;
    let preds = lpm.predict_batch(&xs)?;
    evaluate_predictions(&ys, &preds, pair_sample, rng)
}
