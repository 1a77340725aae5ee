use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use qapnet::bench::{flip_for_maximization, PairInstance, QaplibInstance};
use qapnet::classic::{discretize, rrwm, spectral_match, RrwmConfig};
use qapnet::ngm::{forward, Checkpoint, Problem};
use qapnet::numerics::{Assignment, SparseMatrix};

/// A solver named on the command line: `sm`, `rrwm`, or `<label>=<checkpoint>`.
#[derive(Debug, Clone)]
pub enum Solver {
    Sm,
    Rrwm,
    Net { label: String, path: PathBuf, ckpt: Arc<Checkpoint<f64>> },
}

impl Solver {
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "sm" => Ok(Solver::Sm),
            "rrwm" => Ok(Solver::Rrwm),
            _ => {
                let Some((label, path)) = spec.split_once('=') else {
                    bail!("unknown solver '{spec}' (expected sm, rrwm or <label>=<checkpoint>)");
                };
                if label.is_empty() {
                    bail!("solver '{spec}' has an empty label");
                }
                Ok(Solver::Net {
                    label: label.into(),
                    path: path.into(),
                    ckpt: Arc::new(load_checkpoint(Path::new(path))?),
                })
            }
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Solver::Sm => "sm",
            Solver::Rrwm => "rrwm",
            Solver::Net { label, .. } => label,
        }
    }

    pub fn needs_hyper(&self) -> bool {
        matches!(self, Solver::Net { ckpt, .. } if ckpt.cfg.hyper)
    }

    /// Solves a synthetic pair (affinities are maximized).
    pub fn solve_pair(&self, pair: &PairInstance) -> Result<Assignment> {
        let (n1, n2) = (pair.g1.num_nodes(), pair.g2.num_nodes());
        match self {
            Solver::Sm | Solver::Rrwm => classic(self, pair.affinity(), n1, n2),
            Solver::Net { ckpt, .. } => {
                let mut problem = Problem::new(&pair.association()?)?;
                if ckpt.cfg.hyper {
                    let t = pair.tensor.as_ref().context("hypergraph model needs the third-order tensor")?;
                    problem = problem.with_hyper(t)?;
                }
                Ok(discretize(forward(&problem, &ckpt.params, &ckpt.cfg)?.soft())?)
            }
        }
    }

    /// Solves a QAPLIB instance (objective minimized).
    pub fn solve_qaplib(&self, q: &QaplibInstance) -> Result<Assignment> {
        match self {
            Solver::Sm | Solver::Rrwm => classic(self, &flip_for_maximization(&q.affinity()?), q.n, q.n),
            Solver::Net { ckpt, .. } => solve_qaplib_with(ckpt, q),
        }
    }
}

pub fn solve_qaplib_with(ckpt: &Checkpoint<f64>, q: &QaplibInstance) -> Result<Assignment> {
    let sample = q.sample()?;
    Ok(discretize(forward(&sample.problem, &ckpt.params, &ckpt.cfg)?.soft())?)
}

fn classic(s: &Solver, k: &SparseMatrix<f64>, n1: usize, n2: usize) -> Result<Assignment> {
    let soft = match s {
        Solver::Sm => spectral_match(k, n1, n2)?,
        _ => rrwm(k, n1, n2, &RrwmConfig::default())?.soft,
    };
    Ok(discretize(&soft)?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint<f64>> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn parse_solvers(specs: &[String]) -> Result<Vec<Solver>> {
    if specs.is_empty() {
        bail!("no solvers given");
    }
    specs.iter().map(|s| Solver::parse(s.trim())).collect()
}

/// Thread pool for evaluation fan-out; 0 workers means one per core.
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}
