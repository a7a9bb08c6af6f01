//! Run manifests: enough provenance to reproduce any output bit-exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the raw config (or input) file bytes.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub output_paths: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_bytes: &[u8], seed: Option<u64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_bytes);
        let digest = hasher.finalize();
        let mut hash = String::with_capacity(64);
        for byte in digest {
            hash.push_str(&format!("{byte:02x}"));
        }
        Self {
            command: command.to_string(),
            config_hash: hash,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_paths: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.output_paths.push(path.to_path_buf());
    }

    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let json = serde_json::to_vec_pretty(self)?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}
