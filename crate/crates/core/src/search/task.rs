use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub dim: usize,
    pub num_classes: usize,
    pub points_per_split: usize,
    /// Class means are standard normal vectors times this factor.
    pub mean_scale: f64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            num_classes: 4,
            points_per_split: 2000,
            mean_scale: 0.5,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.num_classes < 2 || self.points_per_split == 0 {
            return Err(Error::Config(
                "task needs dim ≥ 1, at least 2 classes and a nonempty split".into(),
            ));
        }
        if !(self.mean_scale.is_finite() && self.mean_scale >= 0.0) {
            return Err(Error::Config(format!("mean scale must be non-negative, got {}", self.mean_scale)));
        }
        Ok(())
    }
}

/// Row-major points with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }
}

/// Gaussian-mixture classification with unit covariance and two equally sized splits:
/// `train` for the network weights, `val` for the architectural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub config: TaskConfig,
    pub means: Vec<f64>,
    pub train: Split,
    pub val: Split,
}

impl Task {
    pub fn generate(config: &TaskConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::substream(seed, 0);
        let means: Vec<f64> = (0..config.num_classes * config.dim)
            .map(|_| rng.normal() * config.mean_scale)
            .collect();
        let draw = |stream: u64| {
            let mut rng = Rng::substream(seed, stream);
            let mut inputs = Vec::with_capacity(config.points_per_split * config.dim);
            let mut labels = Vec::with_capacity(config.points_per_split);
            for _ in 0..config.points_per_split {
                let c = rng.below(config.num_classes);
                let mean = &means[c * config.dim..(c + 1) * config.dim];
                inputs.extend(mean.iter().map(|m| m + rng.normal()));
                labels.push(c);
            }
            Split {
                inputs,
                labels,
                dim: config.dim,
            }
        };
        let train = draw(1);
        let val = draw(2);
        Ok(Self {
            config: config.clone(),
            means,
            train,
            val,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded_and_shaped() {
        let cfg = TaskConfig::default();
        let a = Task::generate(&cfg, 3).unwrap();
        assert_eq!(a, Task::generate(&cfg, 3).unwrap());
        assert_ne!(a.train, Task::generate(&cfg, 4).unwrap().train);
        assert_eq!((a.train.len(), a.val.len()), (2000, 2000));
        assert_eq!(a.train.inputs.len(), 2000 * 16);
        assert!(a.train.labels.iter().all(|&l| l < 4));
        assert_ne!(a.train, a.val);
    }

    #[test]
    fn points_scatter_around_class_means() {
        let cfg = TaskConfig::default();
        let t = Task::generate(&cfg, 9).unwrap();
        let mut sq = 0.0;
        for i in 0..t.train.len() {
            let c = t.train.labels[i];
            let m = &t.means[c * 16..(c + 1) * 16];
            sq += t.train.point(i).iter().zip(m).map(|(x, m)| (x - m).powi(2)).sum::<f64>();
        }
        let var = sq / (t.train.len() * 16) as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }
}
