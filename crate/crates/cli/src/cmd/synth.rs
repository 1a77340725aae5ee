use std::path::Path;

use anyhow::{Context, Result};
use qapnet::bench::{gen_multi, io::write_dataset};

use crate::config::RunConfig;
use crate::manifest::write_manifest;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let synth = cfg.data.synth(cfg.seed);
    let ds = gen_multi(&synth, cfg.data.graphs)?;
    write_dataset(out, &ds).with_context(|| format!("writing dataset to {}", out.display()))?;
    write_manifest(out, "synth", cfg, &[])?;
    log::info!("wrote {} train and {} test samples to {}", ds.train.len(), ds.test.len(), out.display());
    Ok(())
}
