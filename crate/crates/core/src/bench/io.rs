//! On-disk dataset layout:
//!
//! ```text
//! <run>/dataset.txt                       generator settings
//! <run>/set<k>/{train,test}/<idx>/instance.txt
//! ```
//!
//! `instance.txt` lists each graph's points and the node index of every
//! ground-truth point:
//!
//! ```text
//! synth-sample v1
//! graph <g> <num_points>
//! <x> <y>                (one line per point)
//! order <node of point 0> <node of point 1> ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::affinity::PointSet;
use crate::bench::synth::{Split, SynthConfig, SynthDataset, SynthSample};
use crate::error::{Error, Result};

const DATASET_HEADER: &str = "synth-dataset v1";
const SAMPLE_HEADER: &str = "synth-sample v1";

fn io_err(p: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", p.display()))
}

pub fn sample_dir(run: &Path, set: usize, split: Split, index: usize) -> PathBuf {
    run.join(format!("set{set}")).join(split.name()).join(index.to_string())
}

pub fn config_to_text(cfg: &SynthConfig, graphs: usize) -> String {
    let mut s = format!("{DATASET_HEADER}\n");
    let _ = writeln!(s, "num_sets {}", cfg.num_sets);
    let _ = writeln!(s, "train_per_set {}", cfg.train_per_set);
    let _ = writeln!(s, "test_per_set {}", cfg.test_per_set);
    let _ = writeln!(s, "inliers {}", cfg.inliers);
    let _ = writeln!(s, "outliers {}", cfg.outliers);
    let _ = writeln!(s, "sigma_n {:?}", cfg.sigma_n);
    let _ = writeln!(s, "scale_low {:?}", cfg.scale_low);
    let _ = writeln!(s, "scale_high {:?}", cfg.scale_high);
    let _ = writeln!(s, "sigma2 {:?}", cfg.sigma2);
    let _ = writeln!(s, "sigma3 {:?}", cfg.sigma3);
    let _ = writeln!(s, "hyper {}", cfg.hyper);
    let _ = writeln!(s, "shuffle_target {}", cfg.shuffle_target);
    let _ = writeln!(s, "seed {}", cfg.seed);
    let _ = writeln!(s, "graphs_per_sample {graphs}");
    s
}

fn parse<N: std::str::FromStr>(key: &str, v: &str) -> Result<N> {
    v.parse().map_err(|_| Error::Parse(format!("bad value '{v}' for {key}")))
}

pub fn config_from_text(text: &str) -> Result<(SynthConfig, usize)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(DATASET_HEADER) {
        return Err(Error::Parse(format!("missing '{DATASET_HEADER}' header")));
    }
    let mut cfg = SynthConfig::default();
    let mut graphs = 2;
    for line in lines {
        let mut t = line.split_whitespace();
        let (Some(k), Some(v)) = (t.next(), t.next()) else { continue };
        match k {
            "num_sets" => cfg.num_sets = parse(k, v)?,
            "train_per_set" => cfg.train_per_set = parse(k, v)?,
            "test_per_set" => cfg.test_per_set = parse(k, v)?,
            "inliers" => cfg.inliers = parse(k, v)?,
            "outliers" => cfg.outliers = parse(k, v)?,
            "sigma_n" => cfg.sigma_n = parse(k, v)?,
            "scale_low" => cfg.scale_low = parse(k, v)?,
            "scale_high" => cfg.scale_high = parse(k, v)?,
            "sigma2" => cfg.sigma2 = parse(k, v)?,
            "sigma3" => cfg.sigma3 = parse(k, v)?,
            "hyper" => cfg.hyper = parse(k, v)?,
            "shuffle_target" => cfg.shuffle_target = parse(k, v)?,
            "seed" => cfg.seed = parse(k, v)?,
            "graphs_per_sample" => graphs = parse(k, v)?,
            _ => return Err(Error::Parse(format!("unknown dataset key '{k}'"))),
        }
    }
    cfg.validate()?;
    Ok((cfg, graphs))
}

pub fn sample_to_text(s: &SynthSample) -> String {
    let mut out = format!("{SAMPLE_HEADER}\n");
    for (g, (pts, order)) in s.graphs.iter().zip(&s.order).enumerate() {
        let _ = writeln!(out, "graph {g} {}", pts.len());
        for p in pts.points() {
            let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
        }
        let o: Vec<String> = order.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "order {}", o.join(" "));
    }
    out
}

pub fn sample_from_text(text: &str, set: usize, split: Split, index: usize) -> Result<SynthSample> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(SAMPLE_HEADER) {
        return Err(Error::Parse(format!("missing '{SAMPLE_HEADER}' header")));
    }
    let (mut graphs, mut order) = (Vec::new(), Vec::new());
    while let Some(line) = lines.next() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 || t[0] != "graph" {
            return Err(Error::Parse(format!("expected 'graph <g> <n>', got '{line}'")));
        }
        let n: usize = parse("point count", t[2])?;
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let l = lines.next().ok_or_else(|| Error::Parse("truncated point list".into()))?;
            let xy: Vec<f64> = l.split_whitespace().map(|v| parse("coordinate", v)).collect::<Result<_>>()?;
            if xy.len() != 2 {
                return Err(Error::Parse(format!("bad point line '{l}'")));
            }
            pts.push([xy[0], xy[1]]);
        }
        let l = lines.next().ok_or_else(|| Error::Parse("missing order line".into()))?;
        let mut t = l.split_whitespace();
        if t.next() != Some("order") {
            return Err(Error::Parse(format!("expected order line, got '{l}'")));
        }
        let o: Vec<usize> = t.map(|v| parse("order", v)).collect::<Result<_>>()?;
        if o.iter().any(|&v| v >= n) {
            return Err(Error::Parse("order entry outside the graph".into()));
        }
        graphs.push(PointSet::new(pts)?);
        order.push(o);
    }
    Ok(SynthSample {
        set,
        index,
        split,
        graphs,
        order,
    })
}

pub fn write_dataset(run: &Path, ds: &SynthDataset) -> Result<()> {
    fs::create_dir_all(run).map_err(|e| io_err(run, e))?;
    let cfg_path = run.join("dataset.txt");
    fs::write(&cfg_path, config_to_text(&ds.cfg, ds.graphs_per_sample)).map_err(|e| io_err(&cfg_path, e))?;
    for s in ds.train.iter().chain(&ds.test) {
        let dir = sample_dir(run, s.set, s.split, s.index);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let p = dir.join("instance.txt");
        fs::write(&p, sample_to_text(s)).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

pub fn read_dataset(run: &Path) -> Result<SynthDataset> {
    let cfg_path = run.join("dataset.txt");
    let text = fs::read_to_string(&cfg_path).map_err(|e| io_err(&cfg_path, e))?;
    let (cfg, graphs) = config_from_text(&text)?;
    let mut ds = SynthDataset {
        cfg,
        graphs_per_sample: graphs,
        train: Vec::new(),
        test: Vec::new(),
    };
    for set in 0..cfg.num_sets {
        for (split, count) in [(Split::Train, cfg.train_per_set), (Split::Test, cfg.test_per_set)] {
            for index in 0..count {
                let p = sample_dir(run, set, split, index).join("instance.txt");
                let t = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
                let s = sample_from_text(&t, set, split, index).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                if s.graphs.len() != graphs {
                    return Err(Error::Parse(format!("{}: expected {graphs} graphs", p.display())));
                }
                match split {
                    Split::Train => ds.train.push(s),
                    Split::Test => ds.test.push(s),
                }
            }
        }
    }
    Ok(ds)
}
