use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{encode, CellConfig, DiscreteArch, OperationKind, Selection};

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,lat_ms,total_loss,probe_latency_ms";
pub const ARCH_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Mean sampled latency estimate over the epoch's α steps; 0 when no latency term.
    pub lat_ms: f64,
    pub total_loss: f64,
    /// Noise-free oracle latency of the architecture discretized at the end of the epoch.
    pub probe_latency_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchHistory {
    pub rows: Vec<HistoryRow>,
}

impl SearchHistory {
    pub fn last(&self) -> Option<&HistoryRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.epoch, r.train_loss, r.val_loss, r.lat_ms, r.total_loss, r.probe_latency_ms
            );
        }
        out
    }

    /// Parses a history CSV; errors name the offending line.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == HISTORY_HEADER => {}
            Some((n, _)) => {
                return Err(Error::Dataset(format!(
                    "line {}: expected header `{HISTORY_HEADER}`",
                    n + 1
                )))
            }
            None => return Err(Error::Dataset("empty history file".into())),
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            let bad = |what: &str| Error::Dataset(format!("line {}: {what}", n + 1));
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 6 {
                return Err(bad(&format!("expected 6 fields, found {}", fields.len())));
            }
            let epoch = fields[0].parse().map_err(|_| bad("bad epoch"))?;
            let mut v = [0.0; 5];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| bad(&format!("bad number `{f}`")))?;
            }
            rows.push(HistoryRow {
                epoch,
                train_loss: v[0],
                val_loss: v[1],
                lat_ms: v[2],
                total_loss: v[3],
                probe_latency_ms: v[4],
            });
        }
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text).map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchFileEdge {
    pub from: usize,
    pub to: usize,
    pub op: OperationKind,
}

/// Final architecture artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchFile {
    pub version: u32,
    pub bits: String,
    pub edges: Vec<ArchFileEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ArchFile {
    pub fn new(arch: &DiscreteArch, config: &CellConfig) -> Result<Self> {
        Ok(Self {
            version: ARCH_FILE_VERSION,
            bits: encode(arch, config)?.to_string(),
            edges: arch
                .selections()
                .iter()
                .map(|s| ArchFileEdge {
                    from: s.from,
                    to: s.to,
                    op: s.op,
                })
                .collect(),
            lambda: None,
            eta: None,
            seed: None,
        })
    }

    /// The architecture described by `edges`; `bits`, when present, must agree.
    pub fn arch(&self, config: &CellConfig) -> Result<DiscreteArch> {
        if self.version != ARCH_FILE_VERSION {
            return Err(Error::InvalidArch(format!(
                "unsupported architecture file version {}",
                self.version
            )));
        }
        let sels = self
            .edges
            .iter()
            .map(|e| Selection {
                from: e.from,
                to: e.to,
                op: e.op,
            })
            .collect();
        let arch = DiscreteArch::new(config, sels)?;
        if !self.bits.is_empty() && encode(&arch, config)?.to_string() != self.bits {
            return Err(Error::InvalidArch("`bits` disagrees with `edges`".into()));
        }
        Ok(arch)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArch(format!("{}: {e}", path.display())))
    }
}
