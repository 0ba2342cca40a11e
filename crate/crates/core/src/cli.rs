//! The `ladnas` command-line interface.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors. Every command
//! that writes files also writes `<primary output>.manifest.json` with the resolved
//! configuration, seeds, paths, tool version and wall-clock duration.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::lpm::{evaluate, evaluate_predictions, train_lpm, Lpm, LpmTrainConfig};
use crate::numeric::Rng;
use crate::oracle::{
    collect_dataset, external_latency, split_dataset, synthetic_latency, table_latency, CollectOptions,
    CostTable, ExternalOracle, LatencyDataset, LatencyOracle, OracleConfig, SyntheticOracle, TableOracle,
    DEFAULT_TIMEOUT_S,
};
use crate::search::{
    run_flops_search, run_search, ArchFile, FlopsSearchConfig, SearchConfig, SearchHistory, SearchOutcome,
    TrainingConfig,
};
use crate::space::{decode, encode, space_size, CellConfig, Encoding};

const SEED_ENV: &str = "LADNAS_SEED";

#[derive(Debug, Parser)]
#[command(name = "ladnas", version, about = "Latency-aware differentiable architecture search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample random cells and measure their latency into a JSONL dataset.
    Collect(CollectArgs),
    /// Train the latency predictor on a dataset split.
    TrainLpm(TrainArgs),
    /// Evaluate a trained predictor (or an adapter command) on a dataset.
    EvalLpm(EvalArgs),
    /// Run latency-aware (`--lambda`) or FLOPs-aware (`--eta`) search.
    Search(SearchArgs),
    /// Search-space utilities.
    Space(SpaceArgs),
    /// Print the bit encoding of an architecture file.
    Encode(EncodeArgs),
    /// Print the architecture described by a bit string.
    Decode(DecodeArgs),
    /// Aggregate search histories into summary tables.
    Report(ReportArgs),
    /// Line-oriented latency adapter: reads `{"bits": ...}` lines, writes `{"latency_ms": ...}`.
    #[command(hide = true)]
    Adapter(AdapterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OracleKind {
    Synthetic,
    Table,
    External,
}

#[derive(Debug, Args)]
struct CollectArgs {
    #[arg(long, value_enum)]
    oracle: OracleKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    repeats: u32,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with `[synthetic]` and `[table]` parameters.
    #[arg(long)]
    oracle_config: Option<PathBuf>,
    /// Shell command for `--oracle external`.
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_S)]
    timeout: f64,
    #[arg(long)]
    dedupe: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = 10)]
    max_failures: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 200)]
    batch: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 1e-5)]
    weight_decay: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("predictor").required(true).args(["model", "adapter"]))]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Shell command answering `{"bits": ...}` with `{"latency_ms": ...}`.
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_S)]
    timeout: f64,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Trained predictor; required unless `--eta` is given.
    #[arg(long, required_unless_present = "eta")]
    lpm: Option<PathBuf>,
    #[arg(long, conflicts_with = "eta")]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    task_seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    history: PathBuf,
    /// Prediction noise std in units of the predictor's latency range.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    /// Penalize raw milliseconds instead of the range-normalized latency.
    #[arg(long)]
    raw_ms: bool,
    /// Oracle TOML file whose `[table]` section supplies FLOPs (FLOPs-aware mode).
    #[arg(long, requires = "eta")]
    flops_table: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    /// Oracle TOML file whose `[synthetic]` section drives the latency probe.
    #[arg(long)]
    oracle_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpaceArgs {
    /// Print the number of distinct normal cells.
    #[arg(long, required = true)]
    count: bool,
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Number of non-`none` operations, taken in canonical order.
    #[arg(long, default_value_t = 7)]
    ops: usize,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    arch: PathBuf,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    #[arg(long)]
    bits: String,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// History CSV files or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    history: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AdapterArgs {
    #[arg(long, value_enum, default_value = "synthetic")]
    oracle: OracleKind,
    #[arg(long)]
    oracle_config: Option<PathBuf>,
    /// Answer every request with this latency instead of consulting an oracle.
    #[arg(long)]
    constant: Option<f64>,
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Collect(a) => cmd_collect(a),
        Command::TrainLpm(a) => cmd_train(a),
        Command::EvalLpm(a) => cmd_eval(a),
        Command::Search(a) => cmd_search(a),
        Command::Space(a) => cmd_space(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Report(a) => cmd_report(a),
        Command::Adapter(a) => cmd_adapter(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Manifest {
    command: &'static str,
    started: Instant,
}

impl Manifest {
    fn start(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
        }
    }

    fn write(
        self,
        primary: &Path,
        config: serde_json::Value,
        seeds: serde_json::Value,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> CliResult {
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let manifest = json!({
            "command": self.command,
            "config": config,
            "seeds": seeds,
            "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "duration_s": self.started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(Error::from)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn load_oracle_config(path: Option<&Path>) -> CliResult<OracleConfig> {
    Ok(match path {
        Some(p) => OracleConfig::load(p)?,
        None => OracleConfig::default(),
    })
}

fn timeout(secs: f64) -> CliResult<Duration> {
    if !(secs.is_finite() && secs > 0.0) {
        return Err(usage(format!("--timeout must be positive, got {secs}")));
    }
    Ok(Duration::from_secs_f64(secs))
}

fn cmd_collect(a: CollectArgs) -> CliResult {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    if a.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let manifest = Manifest::start("collect");
    let oracle_cfg = load_oracle_config(a.oracle_config.as_deref())?;
    let oracle: Box<dyn LatencyOracle> = match a.oracle {
        OracleKind::Synthetic => Box::new(SyntheticOracle {
            model: oracle_cfg.synthetic.clone(),
        }),
        OracleKind::Table => Box::new(TableOracle {
            table: oracle_cfg.table.clone(),
        }),
        OracleKind::External => {
            let cmd = a
                .adapter
                .clone()
                .ok_or_else(|| usage("--oracle external requires --adapter"))?;
            Box::new(ExternalOracle {
                command: cmd,
                timeout: timeout(a.timeout)?,
            })
        }
    };
    if a.oracle != OracleKind::External && a.adapter.is_some() {
        return Err(usage("--adapter is only valid with --oracle external"));
    }
    let cell = CellConfig::default();
    let opts = CollectOptions {
        n: a.n,
        repeats: a.repeats,
        seed: a.seed,
        dedupe: a.dedupe,
        jobs: a.jobs,
        max_failures: a.max_failures,
    };
    let result = collect_dataset(oracle.as_ref(), &cell, &oracle_cfg.table, &opts);
    let (ds, failure) = match result {
        Ok(ds) => (ds, None),
        Err(e) => (e.partial, Some(e.error)),
    };
    ds.save(&a.out)?;
    for f in &ds.meta.failures {
        eprintln!("warning: candidate {} skipped: {}", f.candidate, f.error);
    }
    manifest.write(
        &a.out,
        json!({
            "oracle": a.oracle,
            "oracle_params": ds.meta.oracle,
            "n": a.n,
            "repeats": a.repeats,
            "dedupe": a.dedupe,
            "jobs": a.jobs,
            "max_failures": a.max_failures,
            "records_written": ds.len(),
        }),
        json!({ "seed": a.seed }),
        &a.oracle_config.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &[&a.out],
    )?;
    match failure {
        Some(e) => Err(CliError::Runtime(Error::Dataset(format!(
            "collection aborted after {} records (partial output written): {e}",
            ds.len()
        )))),
        None => Ok(()),
    }
}

fn cmd_train(a: TrainArgs) -> CliResult {
    if !(a.split > 0.0 && a.split < 1.0) {
        return Err(usage(format!("--split must be in (0, 1), got {}", a.split)));
    }
    if a.pairs < 2 {
        return Err(usage("--pairs must be at least 2"));
    }
    let manifest = Manifest::start("train-lpm");
    let cell = CellConfig::default();
    let ds = LatencyDataset::load(&a.data)?;
    ds.validate(&cell)?;
    let (train, test) = split_dataset(&ds, a.split, a.seed).map_err(|e| usage(e.to_string()))?;
    let cfg = LpmTrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        momentum: a.momentum,
        weight_decay: a.weight_decay,
        seed: a.seed,
    };
    cfg.validate(train.len()).map_err(|e| usage(e.to_string()))?;
    let outcome = train_lpm(&train, &cell, &cfg)?;
    outcome.model.save(&a.out)?;
    let report = evaluate(&outcome.model, &test, &cell, a.pairs, &mut Rng::substream(a.seed, 7))?;
    let line = json!({
        "final_train_mse": outcome.epoch_losses.last(),
        "n_train": train.len(),
        "eval": report,
    });
    println!("{line}");
    manifest.write(
        &a.out,
        json!({ "train": cfg, "split": a.split, "pairs": a.pairs }),
        json!({ "seed": a.seed }),
        &[&a.data],
        &[&a.out],
    )
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    if a.pairs < 2 {
        return Err(usage("--pairs must be at least 2"));
    }
    let cell = CellConfig::default();
    let ds = LatencyDataset::load(&a.data)?;
    ds.validate(&cell)?;
    let mut rng = Rng::substream(a.seed, 7);
    let report = match (&a.model, &a.adapter) {
        (Some(path), _) => {
            let lpm = Lpm::load(path)?;
            evaluate(&lpm, &ds, &cell, a.pairs, &mut rng)?
        }
        (None, Some(cmd)) => {
            let limit = timeout(a.timeout)?;
            let mut truth = Vec::with_capacity(ds.len());
            let mut preds = Vec::with_capacity(ds.len());
            for r in &ds.records {
                let enc = r.encoding(&cell)?;
                preds.push(external_latency(&enc, cmd, limit).map_err(Error::from)?);
                truth.push(r.latency_ms);
            }
            evaluate_predictions(&truth, &preds, a.pairs, &mut rng)?
        }
        (None, None) => return Err(usage("one of --model or --adapter is required")),
    };
    println!("{}", serde_json::to_string(&report).map_err(Error::from)?);
    Ok(())
}

fn cmd_search(a: SearchArgs) -> CliResult {
    if a.m == 0 {
        return Err(usage("--m must be at least 1"));
    }
    if a.epochs == Some(0) {
        return Err(usage("--epochs must be at least 1"));
    }
    let manifest = Manifest::start("search");
    let cell = CellConfig::default();
    let oracle_cfg = load_oracle_config(a.oracle_config.as_deref())?;
    let mut training = TrainingConfig {
        seed: a.seed,
        probe: oracle_cfg.synthetic.clone(),
        ..TrainingConfig::default()
    };
    if let Some(e) = a.epochs {
        training.epochs = e;
    }
    let mut inputs: Vec<&Path> = Vec::new();
    let (outcome, config_json, coefficient): (SearchOutcome, serde_json::Value, (&str, f64)) = match a.eta {
        Some(eta) => {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(usage(format!("--eta must be non-negative, got {eta}")));
            }
            let table = match &a.flops_table {
                Some(p) => {
                    inputs.push(p);
                    OracleConfig::load(p)?.table
                }
                None => CostTable::default(),
            };
            let cfg = FlopsSearchConfig { training, eta };
            let out = run_flops_search(&cfg, &cell, &table, a.task_seed)?;
            (out, json!({ "mode": "flops", "search": cfg, "table": table }), ("eta", eta))
        }
        None => {
            let lambda = a.lambda.unwrap_or(0.2);
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(usage(format!("--lambda must be non-negative, got {lambda}")));
            }
            if !(a.noise_std.is_finite() && a.noise_std >= 0.0) {
                return Err(usage(format!("--noise-std must be non-negative, got {}", a.noise_std)));
            }
            let path = a.lpm.as_ref().ok_or_else(|| usage("--lpm is required for latency-aware search"))?;
            inputs.push(path);
            let lpm = Lpm::load(path)?;
            let cfg = SearchConfig {
                training,
                lambda,
                latency_samples: a.m,
                noise_std: a.noise_std,
                raw_ms: a.raw_ms,
            };
            let out = run_search(&cfg, &cell, &lpm, a.task_seed)?;
            (out, json!({ "mode": "latency", "search": cfg }), ("lambda", lambda))
        }
    };
    if let Some(p) = &a.oracle_config {
        inputs.push(p);
    }

    let mut file = ArchFile::new(&outcome.arch, &cell)?;
    file.seed = Some(a.seed);
    match coefficient.0 {
        "eta" => file.eta = Some(coefficient.1),
        _ => file.lambda = Some(coefficient.1),
    }
    file.save(&a.out)?;
    outcome.history.save(&a.history)?;
    let last = outcome.history.last().expect("history has one row per epoch");
    println!(
        "final probe latency {:.4} ms, final val loss {:.6}, {} {}",
        last.probe_latency_ms, last.val_loss, coefficient.0, coefficient.1
    );
    manifest.write(
        &a.history,
        config_json,
        json!({ "seed": a.seed, "task_seed": a.task_seed }),
        &inputs,
        &[&a.out, &a.history],
    )
}

fn cmd_space(a: SpaceArgs) -> CliResult {
    if !a.count {
        return Err(usage("nothing to do; pass --count"));
    }
    let cell = CellConfig::reduced(a.nodes, a.ops).map_err(|e| usage(e.to_string()))?;
    let n = space_size(&cell, a.ops as u32)?;
    println!("{n}");
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> CliResult {
    let cell = CellConfig::default();
    let arch = ArchFile::load(&a.arch)?.arch(&cell)?;
    println!("{}", encode(&arch, &cell)?);
    Ok(())
}

fn cmd_decode(a: DecodeArgs) -> CliResult {
    let cell = CellConfig::default();
    let enc = Encoding::parse(a.bits.trim(), &cell).map_err(Error::from)?;
    let arch = decode(&enc, &cell).map_err(Error::from)?;
    println!("{}", ArchFile::new(&arch, &cell)?.to_json()?);
    Ok(())
}

struct RunSummary {
    path: PathBuf,
    coefficient: Option<(String, f64)>,
    history: SearchHistory,
}

fn history_files(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            if found.is_empty() {
                return Err(usage(format!("{}: no history CSV files found", p.display())));
            }
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// Reads `lambda` or `eta` from the manifest written next to a history, if any.
fn coefficient_for(history: &Path) -> Option<(String, f64)> {
    let mut name = history.as_os_str().to_owned();
    name.push(".manifest.json");
    let text = std::fs::read_to_string(PathBuf::from(name)).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    let search = v.get("config")?.get("search")?;
    ["lambda", "eta"]
        .iter()
        .find_map(|k| search.get(*k).and_then(|x| x.as_f64()).map(|x| (k.to_string(), x)))
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let manifest = Manifest::start("report");
    let files = history_files(&a.history)?;
    let mut runs = Vec::with_capacity(files.len());
    for f in &files {
        let history = SearchHistory::load(f)?;
        if history.rows.is_empty() {
            return Err(CliError::Runtime(Error::Dataset(format!("{}: history has no rows", f.display()))));
        }
        runs.push(RunSummary {
            path: f.clone(),
            coefficient: coefficient_for(f),
            history,
        });
    }
    runs.sort_by(|x, y| {
        let key = |r: &RunSummary| r.coefficient.as_ref().map(|c| (c.0.clone(), c.1));
        match (key(x), key(y)) {
            (Some(a), Some(b)) => a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| x.path.cmp(&y.path))
    });

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut summary = String::from("run,coefficient,value,final_probe_latency_ms,final_val_loss,epochs\n");
    let mut curves = String::from("run,epoch,train_loss,val_loss,lat_ms,total_loss,probe_latency_ms\n");
    let mut table = format!(
        "{:<32} {:>8} {:>10} {:>14} {:>14}\n",
        "run", "coef", "value", "probe_lat_ms", "val_loss"
    );
    for r in &runs {
        let run = r.path.display().to_string();
        let last = r.history.last().expect("nonempty history");
        let (kind, value) = match &r.coefficient {
            Some((k, v)) => (k.as_str(), v.to_string()),
            None => ("-", "-".to_string()),
        };
        summary.push_str(&format!(
            "{run},{kind},{value},{},{},{}\n",
            last.probe_latency_ms,
            last.val_loss,
            r.history.rows.len()
        ));
        for h in &r.history.rows {
            curves.push_str(&format!(
                "{run},{},{},{},{},{},{}\n",
                h.epoch, h.train_loss, h.val_loss, h.lat_ms, h.total_loss, h.probe_latency_ms
            ));
        }
        table.push_str(&format!(
            "{:<32} {:>8} {:>10} {:>14.4} {:>14.6}\n",
            run, kind, value, last.probe_latency_ms, last.val_loss
        ));
    }
    let summary_path = a.out.join("summary.csv");
    let curves_path = a.out.join("curves.csv");
    std::fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;
    std::fs::write(&curves_path, curves).map_err(|e| Error::io(&curves_path, e))?;
    print!("{table}");
    let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    manifest.write(
        &summary_path,
        json!({ "runs": runs.len() }),
        json!({}),
        &inputs,
        &[&summary_path, &curves_path],
    )
}

fn cmd_adapter(a: AdapterArgs) -> CliResult {
    let cell = CellConfig::default();
    let oracle_cfg = load_oracle_config(a.oracle_config.as_deref())?;
    let model = oracle_cfg.synthetic.noise_free();
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Error::io("<stdin>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: serde_json::Value = serde_json::from_str(&line).map_err(Error::from)?;
        let bits = req
            .get("bits")
            .and_then(|b| b.as_str())
            .ok_or_else(|| CliError::Runtime(Error::Config("request lacks a `bits` string".into())))?;
        let arch = decode(&Encoding::parse(bits, &cell).map_err(Error::from)?, &cell).map_err(Error::from)?;
        let latency_ms = match (a.constant, a.oracle) {
            (Some(c), _) => c,
            (None, OracleKind::Synthetic) => synthetic_latency(&arch, &cell, &model, 1, &mut Rng::new(0))?,
            (None, OracleKind::Table) => table_latency(&arch, &cell, &oracle_cfg.table)?,
            (None, OracleKind::External) => return Err(usage("the adapter cannot wrap an external oracle")),
        };
        writeln!(stdout, "{}", json!({ "latency_ms": latency_ms })).map_err(|e| Error::io("<stdout>", e))?;
        stdout.flush().map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}
