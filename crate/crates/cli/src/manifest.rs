use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Version of every CSV layout written by this binary.
pub const CSV_SCHEMA: u32 = 1;

pub fn version_stamp() -> String {
    format!("qapnet {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: String,
    seed: u64,
    config_sha256: String,
    csv_schema: u32,
    inputs: Vec<String>,
    config: &'a RunConfig,
}

/// Writes `manifest.toml` next to a command's outputs. Passing the file
/// back as `--config` repeats the run.
pub fn write_manifest(dir: &Path, command: &str, cfg: &RunConfig, inputs: &[&Path]) -> Result<()> {
    let m = Manifest {
        command,
        version: version_stamp(),
        seed: cfg.seed,
        config_sha256: cfg.hash(),
        csv_schema: CSV_SCHEMA,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        config: cfg,
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, toml::to_string(&m)?).with_context(|| format!("writing {}", path.display()))
}
