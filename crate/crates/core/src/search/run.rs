use serde::{Deserialize, Serialize};

use super::{latency_loss, HistoryRow, SearchHistory, Split, Supernet, Task, TaskConfig};
use crate::error::{Error, Result};
use crate::lpm::LatencyPredictor;
use crate::numeric::{OptimizerConfig, OptimizerState, Rng};
use crate::oracle::{expected_flops, synthetic_latency, CostTable, SyntheticHardwareModel};
use crate::space::{discretize, ArchParams, CellConfig, DiscreteArch, NormalizedParams};

/// Settings shared by the latency-aware and FLOPs-aware searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub train_batch: usize,
    pub val_batch: usize,
    pub omega: OptimizerConfig,
    pub alpha: OptimizerConfig,
    /// Seeds weight initialization, minibatch order and latency sampling.
    pub seed: u64,
    pub task: TaskConfig,
    /// Model behind the per-epoch latency probe; its noise is ignored.
    pub probe: SyntheticHardwareModel,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            train_batch: 64,
            val_batch: 64,
            omega: OptimizerConfig::sgd(0.025, 0.9, 3e-4),
            alpha: OptimizerConfig::adam(3e-4, 0.5, 0.999, 1e-3),
            seed: 0,
            task: TaskConfig::default(),
            probe: SyntheticHardwareModel::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.train_batch == 0 || self.val_batch == 0 {
            return Err(Error::Config("epochs and batch sizes must be positive".into()));
        }
        self.task.validate()?;
        self.probe.validate()?;
        for (name, o) in [("omega", &self.omega), ("alpha", &self.alpha)] {
            if !(o.learning_rate.is_finite() && o.learning_rate > 0.0) {
                return Err(Error::Config(format!("{name} learning rate must be positive")));
            }
            if !(o.weight_decay.is_finite() && o.weight_decay >= 0.0) {
                return Err(Error::Config(format!("{name} weight decay must be non-negative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    #[serde(flatten)]
    pub training: TrainingConfig,
    pub lambda: f64,
    /// Sub-architectures drawn per α step for the latency estimate (M).
    pub latency_samples: usize,
    /// Std of the noise added to each prediction, in units of the predictor's latency
    /// range (or in ms when `raw_ms` is set).
    pub noise_std: f64,
    /// Penalize raw milliseconds instead of the range-normalized latency.
    pub raw_ms: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            training: TrainingConfig::default(),
            lambda: 0.2,
            latency_samples: 20,
            noise_std: 0.0,
            raw_ms: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if self.latency_samples == 0 {
            return Err(Error::Config("latency sample count must be at least 1".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise std must be non-negative, got {}", self.noise_std)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsSearchConfig {
    #[serde(flatten)]
    pub training: TrainingConfig,
    /// Coefficient of the expected FLOPs (MFLOPs) in the α objective.
    pub eta: f64,
}

impl Default for FlopsSearchConfig {
    fn default() -> Self {
        Self {
            training: TrainingConfig::default(),
            eta: 0.005,
        }
    }
}

impl FlopsSearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Config(format!("eta must be non-negative, got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub alpha: ArchParams,
    pub arch: DiscreteArch,
    pub history: SearchHistory,
    /// Supernet accuracy on the validation split with the final α̃.
    pub supernet_val_accuracy: f64,
}

/// Penalty added to the α objective: returns the logged value, the loss term and its
/// gradient with respect to α.
type Penalty<'a> = dyn FnMut(&NormalizedParams) -> Result<(f64, f64, Vec<f64>)> + 'a;

struct LogMode {
    /// Whether the penalty value goes into the `lat_ms` column.
    log_latency: bool,
}

/// Latency-aware search minimizing `L_val(α) + λ · LAT(α)`.
pub fn run_search(
    cfg: &SearchConfig,
    config: &CellConfig,
    predictor: &dyn LatencyPredictor,
    task_seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    if cfg.lambda == 0.0 {
        return bilevel(&cfg.training, config, task_seed, None, LogMode { log_latency: true });
    }
    if predictor.input_dim() != config.encoding_len() {
        return Err(Error::DimensionMismatch {
            context: "predictor input vs encoding",
            expected: config.encoding_len(),
            found: predictor.input_dim(),
        });
    }
    let (lo, hi) = predictor.latency_range();
    let span = hi - lo;
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::DegenerateScaler(lo));
    }
    let (unit, offset) = if cfg.raw_ms { (1.0, 0.0) } else { (span, lo) };
    let noise_ms = cfg.noise_std * unit;
    let mut rng = Rng::substream(cfg.training.seed, 2);
    let lambda = cfg.lambda;
    let m = cfg.latency_samples;
    let mut penalty = move |alpha: &NormalizedParams| -> Result<(f64, f64, Vec<f64>)> {
        let est = latency_loss(alpha, config, predictor, m, &mut rng, noise_ms)?;
        let term = lambda * (est.latency_ms - offset) / unit;
        let grad = est.grad_alpha.iter().map(|g| lambda * g / unit).collect();
        Ok((est.latency_ms, term, grad))
    };
    bilevel(&cfg.training, config, task_seed, Some(&mut penalty), LogMode { log_latency: true })
}

/// FLOPs-aware control: minimizes `L_val(α) + η · E[FLOPs](α)` with the exact gradient.
pub fn run_flops_search(
    cfg: &FlopsSearchConfig,
    config: &CellConfig,
    table: &CostTable,
    task_seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    table.validate()?;
    if cfg.eta == 0.0 {
        return bilevel(&cfg.training, config, task_seed, None, LogMode { log_latency: false });
    }
    let eta = cfg.eta;
    let mut penalty = move |alpha: &NormalizedParams| -> Result<(f64, f64, Vec<f64>)> {
        let (value, grad_tilde) = expected_flops(alpha, config, table, true)?;
        let grad = alpha.vjp(&grad_tilde)?.into_iter().map(|g| eta * g).collect();
        Ok((value, eta * value, grad))
    };
    bilevel(&cfg.training, config, task_seed, Some(&mut penalty), LogMode { log_latency: false })
}

fn gather(split: &Split, idx: &[usize], xs: &mut Vec<f64>, ys: &mut Vec<usize>) {
    xs.clear();
    ys.clear();
    for &i in idx {
        xs.extend_from_slice(split.point(i));
        ys.push(split.labels[i]);
    }
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) | Error::NonFiniteGradient { .. } => Error::Diverged { epoch },
        other => other,
    }
}

fn bilevel(
    cfg: &TrainingConfig,
    config: &CellConfig,
    task_seed: u64,
    mut penalty: Option<&mut Penalty<'_>>,
    mode: LogMode,
) -> Result<SearchOutcome> {
    let task = Task::generate(&cfg.task, task_seed)?;
    let mut net = Supernet::new(config, cfg.task.dim, cfg.task.num_classes, &mut Rng::substream(cfg.seed, 0))?;
    let mut alpha = ArchParams::zeros(config);
    let mut omega_opt = OptimizerState::new(cfg.omega, &[net.params().len()]);
    let mut alpha_opt = OptimizerState::new(cfg.alpha, &[alpha.values().len()]);
    let mut order_rng = Rng::substream(cfg.seed, 1);
    let probe = cfg.probe.noise_free();

    let mut train_order: Vec<usize> = (0..task.train.len()).collect();
    let mut val_order: Vec<usize> = (0..task.val.len()).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut history = SearchHistory::default();

    for epoch in 0..cfg.epochs {
        let err = diverged(epoch);
        order_rng.shuffle(&mut train_order);
        order_rng.shuffle(&mut val_order);
        let val_chunks: Vec<&[usize]> = val_order.chunks(cfg.val_batch).collect();
        let (mut train_sum, mut val_sum, mut pen_value, mut pen_term) = (0.0, 0.0, 0.0, 0.0);
        let mut steps = 0usize;

        for (s, train_idx) in train_order.chunks(cfg.train_batch).enumerate() {
            let alpha_tilde = alpha.normalize().map_err(&err)?;
            gather(&task.train, train_idx, &mut xs, &mut ys);
            let r = net.forward_backward(&alpha_tilde, &xs, &ys).map_err(&err)?;
            omega_opt
                .step(&mut [net.params_mut()], &[&r.grad_params])
                .map_err(&err)?;
            train_sum += r.loss;

            gather(&task.val, val_chunks[s % val_chunks.len()], &mut xs, &mut ys);
            let v = net.forward_backward(&alpha_tilde, &xs, &ys).map_err(&err)?;
            let mut grad = alpha_tilde.vjp(&v.grad_alpha_tilde)?;
            if let Some(p) = penalty.as_mut() {
                let (value, term, g) = p(&alpha_tilde)?;
                if !(value.is_finite() && term.is_finite()) {
                    return Err(Error::Diverged { epoch });
                }
                pen_value += value;
                pen_term += term;
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += b;
                }
            }
            alpha_opt
                .step(&mut [alpha.values_mut()], &[&grad])
                .map_err(&err)?;
            val_sum += v.loss;
            steps += 1;
        }

        let n = steps as f64;
        let (train_loss, val_loss) = (train_sum / n, val_sum / n);
        if !(train_loss.is_finite() && val_loss.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        let arch = discretize(&alpha.normalize().map_err(&err)?, config)?;
        let probe_latency_ms = synthetic_latency(&arch, config, &probe, 1, &mut Rng::new(0))?;
        history.rows.push(HistoryRow {
            epoch,
            train_loss,
            val_loss,
            lat_ms: if mode.log_latency { pen_value / n } else { 0.0 },
            total_loss: val_loss + pen_term / n,
            probe_latency_ms,
        });
    }

    let alpha_tilde = alpha.normalize()?;
    let arch = discretize(&alpha_tilde, config)?;
    let supernet_val_accuracy = net.accuracy(&alpha_tilde, &task.val.inputs, &task.val.labels)?;
    Ok(SearchOutcome {
        alpha,
        arch,
        history,
        supernet_val_accuracy,
    })
}

/// α̃ that selects exactly `arch`: one-hot on the chosen operation for selected edges
/// and on `none` elsewhere.
pub fn one_hot_params(arch: &DiscreteArch, config: &CellConfig) -> Result<NormalizedParams> {
    arch.validate(config)?;
    let num_ops = config.num_ops();
    let mut probs = vec![0.0; config.encoding_len()];
    for e in 0..config.num_edges() {
        probs[e * num_ops] = 1.0;
    }
    for s in arch.selections() {
        let e = config.edge_index(s.from, s.to).expect("validated edge");
        let pos = config.op_position(s.op).expect("validated op");
        probs[e * num_ops] = 0.0;
        probs[e * num_ops + pos] = 1.0;
    }
    NormalizedParams::from_probs(config, probs)
}

/// Trains the discrete network `arch` from scratch on the training split and returns
/// its accuracy on the validation split.
pub fn evaluate_arch(
    arch: &DiscreteArch,
    config: &CellConfig,
    cfg: &TrainingConfig,
    task_seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let task = Task::generate(&cfg.task, task_seed)?;
    let alpha = one_hot_params(arch, config)?;
    let mut net = Supernet::new(config, cfg.task.dim, cfg.task.num_classes, &mut Rng::substream(cfg.seed, 3))?;
    let mut opt = OptimizerState::new(cfg.omega, &[net.params().len()]);
    let mut rng = Rng::substream(cfg.seed, 4);
    let mut order: Vec<usize> = (0..task.train.len()).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for idx in order.chunks(cfg.train_batch) {
            gather(&task.train, idx, &mut xs, &mut ys);
            let r = net.forward_backward(&alpha, &xs, &ys).map_err(diverged(epoch))?;
            opt.step(&mut [net.params_mut()], &[&r.grad_params])
                .map_err(diverged(epoch))?;
        }
    }
    net.accuracy(&alpha, &task.val.inputs, &task.val.labels)
}
