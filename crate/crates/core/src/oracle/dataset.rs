//! Latency datasets: collection from an oracle, JSON Lines persistence and splitting.
//!
//! File layout: the first line is `{"meta": {...}}`, every further line one
//! [`LatencyRecord`]. Output is a pure function of the seed and oracle parameters; no
//! timestamps are embedded so reruns are byte-identical.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{flops, CostTable, LatencyOracle};
use crate::error::{Error, Result};
use crate::numeric::Rng;
use crate::space::{decode, encode, sample_uniform_arch, CellConfig, DiscreteArch, Encoding};

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub bits: String,
    pub latency_ms: f64,
    pub flops_m: Option<f64>,
    pub repeats: u32,
    pub oracle_id: String,
}

impl LatencyRecord {
    pub fn encoding(&self, config: &CellConfig) -> Result<Encoding> {
        Ok(Encoding::parse(&self.bits, config)?)
    }

    pub fn arch(&self, config: &CellConfig) -> Result<DiscreteArch> {
        Ok(decode(&self.encoding(config)?, config)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub candidate: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub seed: u64,
    pub oracle: serde_json::Value,
    #[serde(default)]
    pub repeats: u32,
    /// When set, encodings are guaranteed distinct.
    #[serde(default)]
    pub dedupe: bool,
    #[serde(default)]
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyDataset {
    pub meta: DatasetMeta,
    pub records: Vec<LatencyRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: DatasetMeta,
}

impl LatencyDataset {
    /// Wraps records that did not come from [`collect_dataset`], e.g. hand-built
    /// fixtures. The metadata names `oracle_id` and carries no seed.
    pub fn from_records(oracle_id: &str, records: Vec<LatencyRecord>) -> Self {
        Self {
            meta: DatasetMeta {
                version: DATASET_VERSION,
                seed: 0,
                oracle: serde_json::json!({ "id": oracle_id }),
                repeats: records.first().map_or(1, |r| r.repeats),
                dedupe: false,
                failures: Vec::new(),
            },
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks record invariants: valid encodings, positive finite latency, and
    /// distinct encodings when the dataset claims to be deduplicated.
    pub fn validate(&self, config: &CellConfig) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            r.arch(config)
                .map_err(|e| Error::Dataset(format!("record {i}: {e}")))?;
            if !(r.latency_ms.is_finite() && r.latency_ms > 0.0) {
                return Err(Error::Dataset(format!(
                    "record {i}: latency must be positive, got {}",
                    r.latency_ms
                )));
            }
            if self.meta.dedupe && !seen.insert(r.bits.as_str()) {
                return Err(Error::Dataset(format!("record {i}: duplicate encoding")));
            }
        }
        Ok(())
    }

    /// Flattened `(records × encoding_len)` 0/1 inputs and the latency targets.
    pub fn inputs(&self, config: &CellConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        let width = config.encoding_len();
        let mut xs = vec![0.0; self.records.len() * width];
        let mut ys = Vec::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            let enc = r.encoding(config)?;
            decode(&enc, config).map_err(|e| Error::Dataset(format!("record {i}: {e}")))?;
            enc.write_f64(&mut xs[i * width..(i + 1) * width]);
            ys.push(r.latency_ms);
        }
        Ok((xs, ys))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            meta: self.meta.clone(),
        };
        let io = |e| Error::io("<dataset>", e);
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(io)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = loop {
            match lines.next() {
                None => return Err(Error::Dataset("empty file; expected a meta header".into())),
                Some((n, line)) => {
                    let line = line.map_err(|e| Error::io("<dataset>", e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let h: Header = serde_json::from_str(&line)
                        .map_err(|e| Error::Dataset(format!("line {}: bad header: {e}", n + 1)))?;
                    break h;
                }
            }
        };
        if header.meta.version != DATASET_VERSION {
            return Err(Error::Dataset(format!(
                "unsupported dataset version {} (expected {DATASET_VERSION})",
                header.meta.version
            )));
        }
        let mut records = Vec::new();
        for (n, line) in lines {
            let line = line.map_err(|e| Error::io("<dataset>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LatencyRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Dataset(format!("line {}: {e}", n + 1)))?;
            records.push(rec);
        }
        Ok(Self {
            meta: header.meta,
            records,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
    }

    fn with_records(&self, records: Vec<LatencyRecord>) -> Self {
        Self {
            meta: self.meta.clone(),
            records,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub n: usize,
    pub repeats: u32,
    pub seed: u64,
    pub dedupe: bool,
    /// Worker threads; the output does not depend on this value.
    pub jobs: usize,
    /// Records whose measurement fails are skipped and logged. Collection aborts once
    /// more than this many have failed.
    pub max_failures: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            n: 1,
            repeats: 20,
            seed: 0,
            dedupe: false,
            jobs: 1,
            max_failures: 10,
        }
    }
}

/// Collection aborted; `partial` holds every record measured before the abort.
#[derive(Debug)]
pub struct CollectError {
    pub partial: LatencyDataset,
    pub error: Error,
}

impl std::fmt::Display for CollectError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "collection aborted after {} records: {}",
            self.partial.len(),
            self.error
        )
    }
}

impl std::error::Error for CollectError {}

struct Candidate {
    index: u64,
    arch: DiscreteArch,
    rng: Rng,
}

/// Samples uniform random architectures and measures each with `oracle`.
///
/// Candidate `i` draws its architecture and its measurement noise from substream
/// `(seed, i)`, so the result is independent of `jobs` and of thread scheduling.
#[allow(clippy::result_large_err)]
pub fn collect_dataset(
    oracle: &dyn LatencyOracle,
    config: &CellConfig,
    table: &CostTable,
    opts: &CollectOptions,
) -> std::result::Result<LatencyDataset, CollectError> {
    let mut ds = LatencyDataset {
        meta: DatasetMeta {
            version: DATASET_VERSION,
            seed: opts.seed,
            oracle: oracle.describe(),
            repeats: oracle.effective_repeats(opts.repeats),
            dedupe: opts.dedupe,
            failures: Vec::new(),
        },
        records: Vec::with_capacity(opts.n),
    };
    if opts.n == 0 {
        return Err(CollectError {
            partial: ds,
            error: Error::Config("n must be at least 1".into()),
        });
    }
    if opts.repeats == 0 {
        return Err(CollectError {
            partial: ds,
            error: Error::Config("repeats must be at least 1".into()),
        });
    }

    let space = crate::space::space_size(config, (config.num_ops() - 1) as u32).unwrap_or(u128::MAX);
    if opts.dedupe && (opts.n as u128) > space {
        return Err(CollectError {
            partial: ds,
            error: Error::Config(format!("cannot draw {} distinct cells from a space of {space}", opts.n)),
        });
    }

    let jobs = opts.jobs.max(1);
    let mut seen: HashSet<DiscreteArch> = HashSet::new();
    let mut next_index: u64 = 0;
    let oracle_id = oracle.id();
    let repeats = oracle.effective_repeats(opts.repeats);

    while ds.records.len() < opts.n {
        let need = opts.n - ds.records.len();
        let mut batch = Vec::with_capacity(need);
        while batch.len() < need {
            let mut rng = Rng::substream(opts.seed, next_index);
            let arch = sample_uniform_arch(config, &mut rng);
            let index = next_index;
            next_index += 1;
            if opts.dedupe && !seen.insert(arch.clone()) {
                continue;
            }
            batch.push(Candidate { index, arch, rng });
        }

        let measure = |c: &mut Candidate| oracle.measure(&c.arch, config, opts.repeats, &mut c.rng);
        let results: Vec<_> = if jobs == 1 || batch.len() == 1 {
            batch.iter_mut().map(measure).collect()
        } else {
            let chunk = batch.len().div_ceil(jobs);
            std::thread::scope(|s| {
                let handles: Vec<_> = batch
                    .chunks_mut(chunk)
                    .map(|part| s.spawn(move || part.iter_mut().map(measure).collect::<Vec<_>>()))
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("measurement worker panicked"))
                    .collect()
            })
        };

        for (cand, res) in batch.iter().zip(results) {
            match res {
                Ok(latency_ms) => {
                    let enc = encode(&cand.arch, config).expect("sampled arch encodes");
                    ds.records.push(LatencyRecord {
                        bits: enc.to_string(),
                        latency_ms,
                        flops_m: Some(flops(&cand.arch, table)),
                        repeats,
                        oracle_id: oracle_id.clone(),
                    });
                }
                Err(e) => {
                    ds.meta.failures.push(FailureRecord {
                        candidate: cand.index,
                        error: e.to_string(),
                    });
                    if ds.meta.failures.len() > opts.max_failures {
                        return Err(CollectError {
                            partial: ds,
                            error: e.into(),
                        });
                    }
                }
            }
        }
    }
    Ok(ds)
}

/// Seeded shuffle, then the first `round(train_fraction · n)` records go to training.
pub fn split_dataset(
    ds: &LatencyDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LatencyDataset, LatencyDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "split of {n} records at {train_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(seed).shuffle(&mut order);
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.records[i].clone()).collect();
    Ok((
        ds.with_records(pick(&order[..n_train])),
        ds.with_records(pick(&order[n_train..])),
    ))
}
