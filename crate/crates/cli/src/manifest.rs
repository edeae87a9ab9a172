//! Run manifests written next to every output.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the effective configuration as canonical JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

/// Hashes `config` after a round trip through `serde_json::Value`, whose
/// object keys are sorted, so field order does not matter.
pub fn config_hash<T: Serialize>(config: &T) -> Result<(String, serde_json::Value)> {
    let value = serde_json::to_value(config)?;
    let canonical = serde_json::to_string(&value)?;
    let digest = Sha256::digest(canonical.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, value))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

impl RunManifest {
    pub fn new<T: Serialize>(config: &T, seed: Option<u64>, started_at: String, outputs: Vec<PathBuf>) -> Result<Self> {
        let (config_hash, config) = config_hash(config)?;
        Ok(Self {
            command_line: std::env::args().collect(),
            config_hash,
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: now(),
            outputs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
