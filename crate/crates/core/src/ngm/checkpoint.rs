//! Line-oriented checkpoint container.
//!
//! ```text
//! qapnet-checkpoint v1
//! config <key> <value>          one line per NetConfig field
//! meta <key> <value...>         free-form provenance (variant, seed, ...)
//! param <name> <rows> <cols>    followed by one line of row-major values
//! adam step <t>                 optional optimizer state:
//! adam.m <name> <rows> <cols>   first moments, same layout as param
//! adam.v <name> <rows> <cols>   second moments
//! end
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so a save/load
//! cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ngm::{Adam, NetConfig, NetParams, OptimConfig};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

pub const CHECKPOINT_HEADER: &str = "qapnet-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub cfg: NetConfig,
    pub params: NetParams<T>,
    pub adam: Option<Adam<T>>,
    pub meta: BTreeMap<String, String>,
}

fn write_block<T: Scalar>(out: &mut String, tag: &str, name: &str, m: &DenseMatrix<T>) {
    let _ = writeln!(out, "{tag} {name} {} {}", m.rows(), m.cols());
    let vals: Vec<String> = m.data().iter().map(|v| format!("{:?}", v.as_f64())).collect();
    let _ = writeln!(out, "{}", vals.join(" "));
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(cfg: NetConfig, params: NetParams<T>) -> Self {
        Self {
            cfg,
            params,
            adam: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let c = &self.cfg;
        let mut out = String::new();
        let _ = writeln!(out, "{CHECKPOINT_HEADER}");
        let cfg_lines: [(&str, String); 11] = [
            ("num_layers", c.num_layers.to_string()),
            ("channels", c.channels.to_string()),
            ("alpha", format!("{:?}", c.alpha)),
            ("alpha_hat", format!("{:?}", c.alpha_hat)),
            ("lambda2", format!("{:?}", c.lambda2)),
            ("lambda3", format!("{:?}", c.lambda3)),
            ("sinkhorn_embedding", c.sinkhorn_embedding.to_string()),
            ("edge_embedding", c.edge_embedding.to_string()),
            ("hyper", c.hyper.to_string()),
            ("sinkhorn_iters_in_net", c.sinkhorn_iters_in_net.to_string()),
            ("sinkhorn_eps", format!("{:?}", c.sinkhorn_eps)),
        ];
        for (k, v) in cfg_lines {
            let _ = writeln!(out, "config {k} {v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {}", v.replace('\n', " "));
        }
        for (name, m) in self.params.names().iter().zip(self.params.values()) {
            write_block(&mut out, "param", name, m);
        }
        if let Some(adam) = &self.adam {
            let o = &adam.cfg;
            let _ = writeln!(out, "adam step {}", adam.step);
            let _ = writeln!(
                out,
                "adam config {:?} {:?} {:?} {:?} {} {}",
                o.lr, o.beta1, o.beta2, o.eps, o.epochs, o.seed
            );
            for (name, m) in self.params.names().iter().zip(&adam.m) {
                write_block(&mut out, "adam.m", name, m);
            }
            for (name, m) in self.params.names().iter().zip(&adam.v) {
                write_block(&mut out, "adam.v", name, m);
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CHECKPOINT_HEADER) {
            return Err(Error::Parse(format!("missing '{CHECKPOINT_HEADER}' header")));
        }
        let mut cfg = NetConfig::default();
        let mut meta = BTreeMap::new();
        let mut named = Vec::new();
        let (mut am, mut av) = (BTreeMap::new(), BTreeMap::new());
        let mut adam_step = None;
        let mut adam_cfg = None;
        let mut ended = false;
        while let Some(line) = lines.next() {
            let mut tok = line.split_whitespace();
            match tok.next() {
                None => continue,
                Some("end") => {
                    ended = true;
                    break;
                }
                Some("config") => {
                    let key = tok.next().ok_or_else(|| Error::Parse("config line without key".into()))?;
                    let val = tok.next().ok_or_else(|| Error::Parse(format!("config '{key}' without value")))?;
                    set_config(&mut cfg, key, val)?;
                }
                Some("meta") => {
                    let key = tok.next().ok_or_else(|| Error::Parse("meta line without key".into()))?;
                    meta.insert(key.to_string(), tok.collect::<Vec<_>>().join(" "));
                }
                Some(tag @ ("param" | "adam.m" | "adam.v")) => {
                    let name = tok.next().ok_or_else(|| Error::Parse(format!("{tag} line without name")))?;
                    let rows = parse_num::<usize>(tok.next(), "rows")?;
                    let cols = parse_num::<usize>(tok.next(), "cols")?;
                    let body = lines.next().ok_or_else(|| Error::Parse(format!("missing values for '{name}'")))?;
                    let data = body
                        .split_whitespace()
                        .map(|t| parse_num::<f64>(Some(t), name).map(T::lit))
                        .collect::<Result<Vec<T>>>()?;
                    if data.len() != rows * cols {
                        return Err(Error::Parse(format!("'{name}' has {} values, expected {}", data.len(), rows * cols)));
                    }
                    let m = DenseMatrix::from_vec(rows, cols, data)?;
                    match tag {
                        "param" => named.push((name.to_string(), m)),
                        "adam.m" => {
                            am.insert(name.to_string(), m);
                        }
                        _ => {
                            av.insert(name.to_string(), m);
                        }
                    }
                }
                Some("adam") => match tok.next() {
                    Some("step") => adam_step = Some(parse_num::<u64>(tok.next(), "adam step")?),
                    Some("config") => {
                        let f: Vec<&str> = tok.collect();
                        if f.len() != 6 {
                            return Err(Error::Parse("adam config needs 6 fields".into()));
                        }
                        adam_cfg = Some(OptimConfig {
                            lr: parse_num(Some(f[0]), "lr")?,
                            beta1: parse_num(Some(f[1]), "beta1")?,
                            beta2: parse_num(Some(f[2]), "beta2")?,
                            eps: parse_num(Some(f[3]), "eps")?,
                            epochs: parse_num(Some(f[4]), "epochs")?,
                            seed: parse_num(Some(f[5]), "seed")?,
                        });
                    }
                    other => return Err(Error::Parse(format!("unknown adam record {other:?}"))),
                },
                Some(other) => return Err(Error::Parse(format!("unknown checkpoint record '{other}'"))),
            }
        }
        if !ended {
            return Err(Error::Parse("truncated checkpoint (no 'end' line)".into()));
        }
        cfg.validate()?;
        let mut params = NetParams::init(&cfg, 0)?;
        params.load_named(named)?;
        let adam = match adam_step {
            None => None,
            Some(step) => {
                let take = |map: &mut BTreeMap<String, DenseMatrix<T>>| -> Result<Vec<DenseMatrix<T>>> {
                    params
                        .names()
                        .iter()
                        .zip(params.values())
                        .map(|(n, p)| {
                            let m = map.remove(n).ok_or_else(|| Error::Parse(format!("missing optimizer state for '{n}'")))?;
                            if m.shape() != p.shape() {
                                return Err(Error::Shape(format!("optimizer state for '{n}' has the wrong shape")));
                            }
                            Ok(m)
                        })
                        .collect()
                };
                Some(Adam {
                    cfg: adam_cfg.unwrap_or_default(),
                    step,
                    m: take(&mut am)?,
                    v: take(&mut av)?,
                })
            }
        };
        Ok(Self { cfg, params, adam, meta })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

fn parse_num<N: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<N> {
    let t = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    t.parse().map_err(|_| Error::Parse(format!("bad {what} '{t}'")))
}

fn set_config(cfg: &mut NetConfig, key: &str, val: &str) -> Result<()> {
    let b = |v: &str| match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse(format!("bad flag '{v}' for {key}"))),
    };
    match key {
        "num_layers" => cfg.num_layers = parse_num(Some(val), key)?,
        "channels" => cfg.channels = parse_num(Some(val), key)?,
        "alpha" => cfg.alpha = parse_num(Some(val), key)?,
        "alpha_hat" => cfg.alpha_hat = parse_num(Some(val), key)?,
        "lambda2" => cfg.lambda2 = parse_num(Some(val), key)?,
        "lambda3" => cfg.lambda3 = parse_num(Some(val), key)?,
        "sinkhorn_embedding" => cfg.sinkhorn_embedding = b(val)?,
        "edge_embedding" => cfg.edge_embedding = b(val)?,
        "hyper" => cfg.hyper = b(val)?,
        "sinkhorn_iters_in_net" => cfg.sinkhorn_iters_in_net = parse_num(Some(val), key)?,
        "sinkhorn_eps" => cfg.sinkhorn_eps = parse_num(Some(val), key)?,
        _ => return Err(Error::Parse(format!("unknown config key '{key}'"))),
    }
    Ok(())
}
