use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qapnet::bench::{category_of, load_qaplib_dir, rel_obj_score, QaplibInstance};
use qapnet::ngm::{train, Checkpoint, OptimConfig};
use rayon::prelude::*;

use super::{csv_writer, mean_std};
use crate::config::RunConfig;
use crate::manifest::write_manifest;
use crate::solvers::{parse_solvers, pool, solve_qaplib_with, Solver};

pub const SCORES_FILE: &str = "qaplib_scores.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SCORES_HEADER: [&str; 7] = ["instance", "category", "n", "solver", "objective", "bound", "rel_score"];

struct Row {
    instance: String,
    category: String,
    n: usize,
    solver: String,
    objective: f64,
    bound: Option<f64>,
}

impl Row {
    fn rel(&self) -> Result<Option<f64>> {
        self.bound.map(|b| rel_obj_score(self.objective, b)).transpose().map_err(Into::into)
    }
}

fn score<F>(pool: &rayon::ThreadPool, insts: &[QaplibInstance], label: &str, solve: F) -> Result<Vec<Row>>
where
    F: Fn(&QaplibInstance) -> Result<qapnet::numerics::Assignment> + Sync,
{
    pool.install(|| {
        insts
            .par_iter()
            .map(|q| {
                let x = solve(q).with_context(|| format!("{label} on {}", q.name))?;
                Ok(Row {
                    instance: q.name.clone(),
                    category: category_of(&q.name),
                    n: q.n,
                    solver: label.to_string(),
                    objective: q.objective(&x)?,
                    bound: q.known_feasible_bound,
                })
            })
            .collect()
    })
}

/// One self-supervised model per category.
fn train_per_category(cfg: &RunConfig, by_cat: &BTreeMap<String, Vec<QaplibInstance>>, out: &Path) -> Result<BTreeMap<String, Checkpoint<f64>>> {
    let net = cfg.model.net()?;
    if net.hyper {
        bail!("hypergraph models need point coordinates and cannot be trained on QAPLIB");
    }
    let opt = OptimConfig {
        epochs: cfg.qaplib.epochs,
        lr: cfg.qaplib.lr,
        ..cfg.train.optim(cfg.seed)?
    };
    let mut models = BTreeMap::new();
    for (cat, insts) in by_cat {
        let samples = insts.iter().map(QaplibInstance::sample).collect::<qapnet::error::Result<Vec<_>>>()?;
        log::info!("training on category {cat} ({} instances)", samples.len());
        let outcome = train(&samples, &net, &opt)?;
        let mut ck = Checkpoint::new(net, outcome.params);
        ck.meta.insert("variant".into(), cfg.model.variant.clone());
        ck.meta.insert("qaplib_category".into(), cat.clone());
        ck.meta.insert("seed".into(), cfg.seed.to_string());
        ck.save(&out.join(format!("model_{cat}.ckpt")))?;
        models.insert(cat.clone(), ck);
    }
    Ok(models)
}

pub fn run(cfg: &RunConfig, dir: &Path, out: &Path, workers: usize) -> Result<()> {
    let q = &cfg.qaplib;
    let train_mode = match q.mode.as_str() {
        "train" => true,
        "solve" => false,
        other => bail!("unknown qaplib mode '{other}' (expected train or solve)"),
    };
    let mut insts = load_qaplib_dir(dir, q.max_n).with_context(|| format!("loading {}", dir.display()))?;
    if !q.categories.is_empty() {
        insts.retain(|i| q.categories.iter().any(|c| c.eq_ignore_ascii_case(&category_of(&i.name))));
    }
    if insts.is_empty() {
        bail!("no QAPLIB instances selected from {}", dir.display());
    }
    // In train mode the trained model is always scored; naming its variant
    // in the solver list is allowed.
    let specs: Vec<String> = q
        .solvers
        .iter()
        .filter(|s| !(train_mode && **s == cfg.model.variant))
        .cloned()
        .collect();
    let solvers = if specs.is_empty() && train_mode { Vec::new() } else { parse_solvers(&specs)? };
    let pool = pool(workers)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut rows = Vec::new();
    for s in &solvers {
        rows.extend(score(&pool, &insts, s.label(), |i| s.solve_qaplib(i))?);
    }

    if train_mode {
        let mut by_cat: BTreeMap<String, Vec<QaplibInstance>> = BTreeMap::new();
        for i in &insts {
            by_cat.entry(category_of(&i.name)).or_default().push(i.clone());
        }
        let models = train_per_category(cfg, &by_cat, out)?;
        let label = cfg.model.variant.clone();
        // Rows: test category. Columns: category the model was trained on.
        let cats: Vec<&String> = by_cat.keys().collect();
        let mut grid = csv_writer(&out.join(CONFUSION_FILE))?;
        let mut header = vec!["test_category".to_string()];
        header.extend(cats.iter().map(|c| c.to_string()));
        grid.write_record(&header)?;
        for test in &cats {
            let mut line = vec![test.to_string()];
            for train in &cats {
                let cell = score(&pool, &by_cat[*test], &label, |i| solve_qaplib_with(&models[*train], i))?;
                let rels: Vec<f64> = cell.iter().filter_map(|r| r.rel().transpose()).collect::<Result<_>>()?;
                line.push(if rels.is_empty() { String::new() } else { format!("{:.6}", mean_std(&rels).0) });
                if test == train {
                    rows.extend(cell);
                }
            }
            grid.write_record(&line)?;
        }
        grid.flush()?;
    }

    rows.sort_by(|a, b| (&a.instance, &a.solver).cmp(&(&b.instance, &b.solver)));
    let mut w = csv_writer(&out.join(SCORES_FILE))?;
    w.write_record(SCORES_HEADER)?;
    for r in &rows {
        w.write_record([
            r.instance.clone(),
            r.category.clone(),
            r.n.to_string(),
            r.solver.clone(),
            format!("{}", r.objective),
            r.bound.map_or(String::new(), |b| format!("{b}")),
            r.rel()?.map_or(String::new(), |s| format!("{s:.6}")),
        ])?;
    }
    w.flush()?;
    let mut inputs: Vec<&Path> = vec![dir];
    for s in &solvers {
        if let Solver::Net { path, .. } = s {
            inputs.push(path);
        }
    }
    write_manifest(out, "qaplib", cfg, &inputs)
}
