use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CostTable, SyntheticHardwareModel};
use crate::error::{Error, Result};

/// Oracle parameter file (TOML). Both sections are optional and default to the
/// built-in constants.
///
/// ```toml
/// [synthetic]
/// fixed_overhead_ms = 5.0
/// memory_penalty_ms = 0.9
/// depth_penalty_ms = 1.2
/// measurement_noise_std_ms = 0.0
/// [synthetic.base_ms]
/// skip-connect = 0.3
/// # ... one entry per non-none operation
///
/// [table.latency_ms]
/// # ...
/// [table.flops_m]
/// # ...
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub synthetic: SyntheticHardwareModel,
    pub table: CostTable,
}

impl OracleConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.synthetic.validate()?;
        cfg.table.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("oracle config serializes")
    }
}
