use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qapnet::bench::io::read_dataset;
use qapnet::bench::{accuracy, gen_synthetic, PairInstance, SynthConfig, SynthDataset};
use rayon::prelude::*;

use super::{csv_writer, mean_std};
use crate::config::RunConfig;
use crate::manifest::write_manifest;
use crate::solvers::{parse_solvers, pool, Solver};

pub const EVAL_FILE: &str = "eval.csv";
pub const EVAL_HEADER: [&str; 7] = ["source", "solver", "sigma_n", "outliers", "samples", "accuracy", "accuracy_std"];

struct Source {
    label: String,
    ds: SynthDataset,
}

fn sources(cfg: &RunConfig, datasets: &[PathBuf]) -> Result<Vec<Source>> {
    if !datasets.is_empty() {
        return datasets
            .iter()
            .map(|p| {
                Ok(Source {
                    label: p.display().to_string(),
                    ds: read_dataset(p).with_context(|| format!("reading dataset {}", p.display()))?,
                })
            })
            .collect();
    }
    if cfg.eval.sigma_n.is_empty() || cfg.eval.outliers.is_empty() {
        bail!("no noise or outlier levels to evaluate");
    }
    let mut out = Vec::new();
    for &sigma_n in &cfg.eval.sigma_n {
        for &outliers in &cfg.eval.outliers {
            let synth = SynthConfig {
                train_per_set: 0,
                sigma_n,
                outliers,
                ..cfg.data.synth(cfg.seed)
            };
            out.push(Source {
                label: "generated".into(),
                ds: gen_synthetic(&synth)?,
            });
        }
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig, datasets: &[PathBuf], out: &Path, workers: usize, train_split: bool) -> Result<()> {
    let solvers = parse_solvers(&cfg.eval.solvers)?;
    let hyper = solvers.iter().any(Solver::needs_hyper);
    let pool = pool(workers)?;
    let mut w = csv_writer(&out.join(EVAL_FILE))?;
    w.write_record(EVAL_HEADER)?;
    for src in sources(cfg, datasets)? {
        let samples = if train_split { &src.ds.train } else { &src.ds.test };
        if samples.is_empty() {
            bail!("{}: no samples in the evaluated split", src.label);
        }
        let scfg = SynthConfig {
            hyper,
            ..src.ds.cfg.clone()
        };
        let pairs: Vec<PairInstance> = pool.install(|| samples.par_iter().map(|s| s.pair(0, 1, &scfg)).collect::<qapnet::error::Result<_>>())?;
        for solver in &solvers {
            let accs: Vec<f64> = pool.install(|| {
                pairs
                    .par_iter()
                    .map(|p| Ok(accuracy(&solver.solve_pair(p)?, &p.gt)?))
                    .collect::<Result<_>>()
            })?;
            let (mean, std) = mean_std(&accs);
            log::info!("{} sigma_n {} outliers {}: {} {:.4}", src.label, scfg.sigma_n, scfg.outliers, solver.label(), mean);
            w.write_record([
                src.label.clone(),
                solver.label().to_string(),
                format!("{:?}", scfg.sigma_n),
                scfg.outliers.to_string(),
                accs.len().to_string(),
                format!("{mean:.6}"),
                format!("{std:.6}"),
            ])?;
        }
    }
    w.flush()?;
    let mut inputs: Vec<&Path> = datasets.iter().map(PathBuf::as_path).collect();
    for s in &solvers {
        if let Solver::Net { path, .. } = s {
            inputs.push(path);
        }
    }
    write_manifest(out, "eval", cfg, &inputs)
}
