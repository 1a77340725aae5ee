//! `qapnet`: dataset generation, training, evaluation, QAPLIB runs and
//! multi-graph synchronization from the command line.

mod cmd;
mod config;
mod manifest;
mod solvers;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qapnet::ngm::Variant;

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "qapnet", version, about = "Neural and classic quadratic assignment solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config (or a manifest from an earlier run).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Evaluation threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum QaplibMode {
    Train,
    Solve,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SyncMode {
    Nmgm,
    #[value(name = "nmgm-t")]
    NmgmT,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse::<Variant>().map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point-set dataset.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma_n: Option<f64>,
        #[arg(long)]
        outliers: Option<usize>,
        /// Observed graphs per sample.
        #[arg(long)]
        graphs: Option<usize>,
    },
    /// Train a model on a generated dataset.
    Train {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_variant)]
        variant: Option<Variant>,
        /// Graphs per sample for nmgm (default: all in the dataset).
        #[arg(long)]
        graphs: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Continue from a checkpoint, optimizer state included.
        #[arg(long, conflicts_with = "init")]
        resume: Option<PathBuf>,
        /// Start from a checkpoint's parameters with a fresh optimizer.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Matching accuracy of solvers on test sets.
    Eval {
        /// Dataset directories; without any, test sets are generated for
        /// every noise/outlier level.
        datasets: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// `sm`, `rrwm` or `<label>=<checkpoint>`.
        #[arg(long, value_delimiter = ',')]
        solvers: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        sigma_n: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        outliers: Option<Vec<usize>>,
        /// Evaluate the training split instead of the test split.
        #[arg(long)]
        train_split: bool,
    },
    /// Relative objective scores on QAPLIB instances.
    Qaplib {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<QaplibMode>,
        #[arg(long, value_delimiter = ',')]
        solvers: Option<Vec<String>>,
        /// Categories to keep (name prefix, e.g. `chr`).
        #[arg(long, value_delimiter = ',')]
        category: Option<Vec<String>>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Multi-graph accuracy against the number of graphs.
    Sync {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<SyncMode>,
        #[arg(long, value_delimiter = ',')]
        graphs: Option<Vec<usize>>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            common,
            sigma_n,
            outliers,
            graphs,
        } => {
            let mut cfg = common.load()?;
            if let Some(s) = sigma_n {
                cfg.data.sigma_n = s;
            }
            if let Some(k) = outliers {
                cfg.data.outliers = k;
            }
            if let Some(m) = graphs {
                cfg.data.graphs = m;
            }
            cmd::synth::run(&cfg, &common.out)
        }
        Command::Train {
            dataset,
            common,
            variant,
            graphs,
            epochs,
            resume,
            init,
        } => {
            let mut cfg = common.load()?;
            if let Some(v) = variant {
                cfg.model.variant = v.name().into();
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            cmd::train::run(
                &cfg,
                &cmd::train::TrainArgs {
                    dataset,
                    out: common.out,
                    graphs,
                    resume,
                    init,
                    workers: common.workers,
                },
            )
        }
        Command::Eval {
            datasets,
            common,
            solvers,
            sigma_n,
            outliers,
            train_split,
        } => {
            let mut cfg = common.load()?;
            if let Some(s) = solvers {
                cfg.eval.solvers = s;
            }
            if let Some(s) = sigma_n {
                cfg.eval.sigma_n = s;
            }
            if let Some(k) = outliers {
                cfg.eval.outliers = k;
            }
            cmd::eval::run(&cfg, &datasets, &common.out, common.workers, train_split)
        }
        Command::Qaplib {
            dir,
            common,
            mode,
            solvers,
            category,
            max_n,
            epochs,
        } => {
            let mut cfg = common.load()?;
            if let Some(m) = mode {
                cfg.qaplib.mode = if m == QaplibMode::Train { "train" } else { "solve" }.into();
            }
            if let Some(s) = solvers {
                cfg.qaplib.solvers = s;
            }
            if let Some(c) = category {
                cfg.qaplib.categories = c;
            }
            if let Some(n) = max_n {
                cfg.qaplib.max_n = n;
            }
            if let Some(e) = epochs {
                cfg.qaplib.epochs = e;
            }
            cmd::qaplib::run(&cfg, &dir, &common.out, common.workers)
        }
        Command::Sync {
            dataset,
            common,
            checkpoint,
            mode,
            graphs,
        } => {
            let mut cfg = common.load()?;
            if let Some(m) = mode {
                cfg.sync.mode = if m == SyncMode::Nmgm { "nmgm" } else { "nmgm-t" }.into();
            }
            if let Some(g) = graphs {
                cfg.sync.graphs = g;
            }
            cmd::sync::run(&cfg, &dataset, checkpoint.as_deref(), &common.out, common.workers)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
