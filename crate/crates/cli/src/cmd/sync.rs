use std::path::Path;

use anyhow::{bail, Context, Result};
use qapnet::bench::io::read_dataset;
use qapnet::multigraph::{mean_accuracy, nmgm_forward};
use rayon::prelude::*;

use super::csv_writer;
use super::train::multi_samples;
use crate::config::RunConfig;
use crate::manifest::write_manifest;
use crate::solvers::{load_checkpoint, pool};

pub const SYNC_FILE: &str = "sync.csv";
pub const SYNC_HEADER: [&str; 6] = ["mode", "graphs", "samples", "accuracy", "pairwise_accuracy", "fallbacks"];

pub fn run(cfg: &RunConfig, dataset: &Path, checkpoint: Option<&Path>, out: &Path, workers: usize) -> Result<()> {
    let mode = cfg.sync.mode.as_str();
    if mode != "nmgm" && mode != "nmgm-t" {
        bail!("unknown sync mode '{mode}' (expected nmgm or nmgm-t)");
    }
    let Some(ck_path) = checkpoint else {
        bail!("{mode} needs --checkpoint (pairwise-trained for nmgm-t, trained with --variant nmgm for nmgm)");
    };
    let ck = load_checkpoint(ck_path)?;
    let trained_as = ck.meta.get("variant").map(String::as_str);
    if mode == "nmgm" && trained_as.is_some_and(|v| v != "nmgm") {
        log::warn!("mode nmgm with a checkpoint trained as {}; this is nmgm-t", trained_as.unwrap_or("?"));
    }
    let sync = cfg.sync.sync(&ck.cfg)?;
    let ds = read_dataset(dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
    if ds.test.is_empty() {
        bail!("dataset {} has no test samples", dataset.display());
    }
    if cfg.sync.graphs.is_empty() {
        bail!("no graph counts given");
    }
    let pool = pool(workers)?;
    let mut w = csv_writer(&out.join(SYNC_FILE))?;
    w.write_record(SYNC_HEADER)?;
    for &m in &cfg.sync.graphs {
        if m < 2 || m > ds.graphs_per_sample {
            bail!("graph count {m} outside 2..={} for this dataset", ds.graphs_per_sample);
        }
        let samples = multi_samples(&ds, &ds.test, m, workers)?;
        let res: Vec<(f64, f64, bool)> = pool.install(|| {
            samples
                .par_iter()
                .map(|s| {
                    let f = nmgm_forward(s, &ck.params, &ck.cfg, &sync)?;
                    Ok((
                        mean_accuracy(&f.synced_values(), &s.gts)?,
                        mean_accuracy(&f.pairwise_values(), &s.gts)?,
                        f.info.fallback,
                    ))
                })
                .collect::<Result<_>>()
        })?;
        let n = res.len() as f64;
        let acc = res.iter().map(|r| r.0).sum::<f64>() / n;
        let pw = res.iter().map(|r| r.1).sum::<f64>() / n;
        let fallbacks = res.iter().filter(|r| r.2).count();
        log::info!("{mode} m = {m}: accuracy {acc:.4} (pairwise {pw:.4}, {fallbacks} fallbacks)");
        w.write_record([
            mode.to_string(),
            m.to_string(),
            res.len().to_string(),
            format!("{acc:.6}"),
            format!("{pw:.6}"),
            fallbacks.to_string(),
        ])?;
    }
    w.flush()?;
    write_manifest(out, "sync", cfg, &[dataset, ck_path])
}
