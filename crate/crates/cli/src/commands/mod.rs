pub mod analytic;
pub mod ingest;
pub mod mc_price;
pub mod sandwich_audit;
pub mod simulate;

use std::path::{Path, PathBuf};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

pub fn ensure_out_dir(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

pub fn write_bytes(
    manifest: &mut RunManifest,
    out: &Path,
    name: &str,
    bytes: &[u8],
) -> anyhow::Result<PathBuf> {
    let path = out.join(name);
    std::fs::write(&path, bytes)?;
    manifest.record(&path);
    Ok(path)
}

pub fn write_json<T: serde::Serialize>(
    manifest: &mut RunManifest,
    out: &Path,
    name: &str,
    value: &T,
) -> anyhow::Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(manifest, out, name, &bytes)
}

pub fn write_distribution_csv(
    manifest: &mut RunManifest,
    out: &Path,
    name: &str,
    table: &[f64],
) -> anyhow::Result<PathBuf> {
    let mut buf = Vec::new();
    chainq_core::queue::export::write_distribution_csv(table, &mut buf)?;
    write_bytes(manifest, out, name, &buf)
}
