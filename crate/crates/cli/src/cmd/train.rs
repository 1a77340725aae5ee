use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qapnet::bench::io::read_dataset;
use qapnet::bench::{SynthConfig, SynthDataset};
use qapnet::multigraph::{train_nmgm, MultiSample};
use qapnet::ngm::{train_from, Adam, Checkpoint, EpochRecord, NetConfig, NetParams, Problem, Sample, Supervision, Variant};
use rayon::prelude::*;

use super::{csv_writer, first_graphs};
use crate::config::RunConfig;
use crate::manifest::write_manifest;
use crate::solvers::{load_checkpoint, pool};

pub struct TrainArgs {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub graphs: Option<usize>,
    pub resume: Option<PathBuf>,
    pub init: Option<PathBuf>,
    pub workers: usize,
}

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSS_FILE: &str = "loss.csv";

/// Permutation-supervised samples from graphs 0 and 1 of each training
/// sample. `hyper` adds the third-order tensor.
pub fn pair_samples(ds: &SynthDataset, samples: &[qapnet::bench::SynthSample], hyper: bool, workers: usize) -> Result<Vec<Sample<f64>>> {
    let cfg = SynthConfig { hyper, ..ds.cfg.clone() };
    pool(workers)?.install(|| {
        samples
            .par_iter()
            .map(|s| {
                let p = s.pair(0, 1, &cfg)?;
                let mut problem = Problem::new(&p.association()?)?;
                if let Some(t) = &p.tensor {
                    problem = problem.with_hyper(t)?;
                }
                Ok(Sample {
                    problem,
                    target: Supervision::Permutation(p.gt),
                })
            })
            .collect()
    })
}

pub fn multi_samples(ds: &SynthDataset, samples: &[qapnet::bench::SynthSample], m: usize, workers: usize) -> Result<Vec<MultiSample<f64>>> {
    pool(workers)?.install(|| {
        samples
            .par_iter()
            .map(|s| Ok(MultiSample::from_synth(&first_graphs(s, m)?, &ds.cfg)?))
            .collect()
    })
}

struct Start {
    variant: Variant,
    net: NetConfig,
    params: NetParams<f64>,
    adam: Adam<f64>,
}

fn start(cfg: &RunConfig, args: &TrainArgs) -> Result<Start> {
    if let Some(path) = &args.resume {
        let ck = load_checkpoint(path)?;
        let mut adam = ck.adam.context("checkpoint has no optimizer state to resume from")?;
        adam.cfg.epochs = cfg.train.epochs;
        let variant = match ck.meta.get("variant") {
            Some(v) => v.parse()?,
            None => cfg.model.variant()?,
        };
        return Ok(Start {
            variant,
            net: ck.cfg,
            params: ck.params,
            adam,
        });
    }
    let variant = cfg.model.variant()?;
    let (net, params) = match &args.init {
        Some(path) => {
            let ck = load_checkpoint(path)?;
            (ck.cfg, ck.params)
        }
        None => {
            let net = cfg.model.net()?;
            let params = NetParams::init(&net, cfg.seed)?;
            (net, params)
        }
    };
    let adam = Adam::new(cfg.train.optim(cfg.seed)?, params.values().iter().map(|m| m.shape()));
    Ok(Start { variant, net, params, adam })
}

fn write_log(path: &Path, log: &[EpochRecord], append: bool) -> Result<()> {
    let mut w = if append && path.exists() {
        let f = std::fs::OpenOptions::new().append(true).open(path)?;
        csv::WriterBuilder::new().has_headers(false).from_writer(f)
    } else {
        let mut w = csv_writer(path)?;
        w.write_record(["epoch", "steps", "mean_loss", "train_accuracy"])?;
        w
    };
    for r in log {
        w.write_record([
            r.epoch.to_string(),
            r.steps.to_string(),
            format!("{:?}", r.mean_loss),
            r.accuracy.map_or(String::new(), |a| format!("{a:?}")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(cfg: &RunConfig, args: &TrainArgs) -> Result<()> {
    let ds = read_dataset(&args.dataset).with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    if ds.train.is_empty() {
        bail!("dataset {} has no training samples", args.dataset.display());
    }
    let Start {
        variant,
        net,
        params,
        adam,
    } = start(cfg, args)?;
    log::info!("training {variant} on {} samples for {} epochs", ds.train.len(), adam.cfg.epochs);
    let outcome = if variant == Variant::Nmgm {
        let m = args.graphs.unwrap_or(ds.graphs_per_sample);
        let samples = multi_samples(&ds, &ds.train, m, args.workers)?;
        let sync = cfg.sync.sync(&net)?;
        train_nmgm(&samples, &net, &sync, params, adam, |_| {})?
    } else {
        let samples = pair_samples(&ds, &ds.train, net.hyper, args.workers)?;
        train_from(&samples, &net, params, adam, |_| {})?
    };

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_log(&args.out.join(LOSS_FILE), &outcome.log, args.resume.is_some())?;
    let mut ck = Checkpoint::new(net, outcome.params);
    ck.meta.insert("variant".into(), variant.name().into());
    ck.meta.insert("seed".into(), cfg.seed.to_string());
    ck.meta.insert("dataset".into(), args.dataset.display().to_string());
    ck.meta.insert("optimizer_steps".into(), outcome.optimizer.step.to_string());
    ck.meta.insert("config_sha256".into(), cfg.hash());
    ck.adam = Some(outcome.optimizer);
    let path = args.out.join(CHECKPOINT_FILE);
    ck.save(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut inputs: Vec<&Path> = vec![&args.dataset];
    inputs.extend(args.resume.as_deref().or(args.init.as_deref()));
    write_manifest(&args.out, "train", cfg, &inputs)?;
    Ok(())
}
