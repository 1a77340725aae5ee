pub mod eval;
pub mod qaplib;
pub mod sync;
pub mod synth;
pub mod train;

use std::path::Path;

use anyhow::{bail, Context, Result};
use qapnet::bench::SynthSample;

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// The sample restricted to its first `m` graphs.
pub fn first_graphs(s: &SynthSample, m: usize) -> Result<SynthSample> {
    if m < 2 || m > s.num_graphs() {
        bail!("{m} graphs requested from a sample with {}", s.num_graphs());
    }
    let mut t = s.clone();
    t.graphs.truncate(m);
    t.order.truncate(m);
    Ok(t)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
