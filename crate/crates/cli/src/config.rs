//! Configuration-file ingestion.
//!
//! A configuration file is the scenario schema (all fields optional, falling
//! back to the built-in defaults) plus an optional `experiment` block
//! carrying sweep, seed-count, mechanism, and master-seed defaults that
//! command-line flags override. Relative paths that do not resolve are
//! retried against the directory named by `SYNCMARKET_CONFIG_DIR`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use syncmarket_core::market::ScenarioConfig;

/// Environment variable naming the default configuration directory.
pub const CONFIG_DIR_ENV: &str = "SYNCMARKET_CONFIG_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentBlock {
    pub sweep: Option<SweepBlock>,
    pub seeds: Option<u64>,
    pub mechanisms: Option<Vec<String>>,
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

/// Resolve a config path, consulting `SYNCMARKET_CONFIG_DIR` for relative
/// paths that do not exist as given.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(CONFIG_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}

/// Load and validate a configuration file.
pub fn load(path: &Path) -> Result<FileConfig, String> {
    let resolved = resolve_path(path);
    let text = std::fs::read_to_string(&resolved)
        .map_err(|e| format!("cannot read config {}: {e}", resolved.display()))?;
    let config: FileConfig = serde_json::from_str(&text)
        .map_err(|e| format!("config {} does not match the schema: {e}", resolved.display()))?;
    config
        .scenario
        .validate()
        .map_err(|e| format!("config {}: {e}", resolved.display()))?;
    Ok(config)
}
