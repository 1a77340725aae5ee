//! Run configuration: one TOML file shared by every command. Missing keys
//! take the library defaults; command-line flags are applied on top.

use std::path::Path;

use anyhow::{bail, Context, Result};
use qapnet::bench::SynthConfig;
use qapnet::multigraph::{FallbackRule, SyncConfig};
use qapnet::ngm::{NetConfig, OptimConfig, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub sync: SyncSection,
    pub qaplib: QaplibSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            sync: SyncSection::default(),
            qaplib: QaplibSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub num_sets: usize,
    pub train_per_set: usize,
    pub test_per_set: usize,
    pub inliers: usize,
    pub outliers: usize,
    pub sigma_n: f64,
    pub scale_low: f64,
    pub scale_high: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    pub hyper: bool,
    pub shuffle_target: bool,
    /// Observed graphs per sample; 2 is pairwise data.
    pub graphs: usize,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            num_sets: s.num_sets,
            train_per_set: s.train_per_set,
            test_per_set: s.test_per_set,
            inliers: s.inliers,
            outliers: s.outliers,
            sigma_n: s.sigma_n,
            scale_low: s.scale_low,
            scale_high: s.scale_high,
            sigma2: s.sigma2,
            sigma3: s.sigma3,
            hyper: s.hyper,
            shuffle_target: s.shuffle_target,
            graphs: 2,
        }
    }
}

impl DataSection {
    pub fn synth(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            num_sets: self.num_sets,
            train_per_set: self.train_per_set,
            test_per_set: self.test_per_set,
            inliers: self.inliers,
            outliers: self.outliers,
            sigma_n: self.sigma_n,
            scale_low: self.scale_low,
            scale_high: self.scale_high,
            sigma2: self.sigma2,
            sigma3: self.sigma3,
            hyper: self.hyper,
            shuffle_target: self.shuffle_target,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: String,
    pub num_layers: usize,
    pub channels: usize,
    pub alpha: f64,
    pub alpha_hat: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub sinkhorn_iters: usize,
    pub sinkhorn_eps: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = NetConfig::default();
        Self {
            variant: Variant::Ngm.name().into(),
            num_layers: c.num_layers,
            channels: c.channels,
            alpha: c.alpha,
            alpha_hat: c.alpha_hat,
            lambda2: c.lambda2,
            lambda3: c.lambda3,
            sinkhorn_iters: c.sinkhorn_iters_in_net,
            sinkhorn_eps: c.sinkhorn_eps,
        }
    }
}

impl ModelSection {
    pub fn variant(&self) -> Result<Variant> {
        Ok(self.variant.parse::<Variant>()?)
    }

    pub fn net(&self) -> Result<NetConfig> {
        let cfg = NetConfig {
            num_layers: self.num_layers,
            channels: self.channels,
            alpha: self.alpha,
            alpha_hat: self.alpha_hat,
            lambda2: self.lambda2,
            lambda3: self.lambda3,
            sinkhorn_iters_in_net: self.sinkhorn_iters,
            sinkhorn_eps: self.sinkhorn_eps,
            ..NetConfig::for_variant(self.variant()?)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let o = OptimConfig::default();
        Self {
            epochs: o.epochs,
            lr: o.lr,
            beta1: o.beta1,
            beta2: o.beta2,
            eps: o.eps,
        }
    }
}

impl TrainSection {
    pub fn optim(&self, seed: u64) -> Result<OptimConfig> {
        let o = OptimConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            epochs: self.epochs,
            seed,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub solvers: Vec<String>,
    /// Noise levels of generated test sets (used when no dataset is given).
    pub sigma_n: Vec<f64>,
    pub outliers: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            solvers: vec!["sm".into(), "rrwm".into()],
            sigma_n: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            outliers: vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncSection {
    pub mode: String,
    pub graphs: Vec<usize>,
    pub delta: f64,
    /// `spectral-gap` or `top-gap`.
    pub rule: String,
}

impl Default for SyncSection {
    fn default() -> Self {
        let s = SyncConfig::default();
        Self {
            mode: "nmgm".into(),
            graphs: vec![2, 3, 4],
            delta: s.delta,
            rule: "spectral-gap".into(),
        }
    }
}

impl SyncSection {
    pub fn sync(&self, net: &NetConfig) -> Result<SyncConfig> {
        let rule = match self.rule.as_str() {
            "spectral-gap" => FallbackRule::SpectralGap,
            "top-gap" => FallbackRule::TopGap,
            other => bail!("unknown fallback rule '{other}' (expected spectral-gap or top-gap)"),
        };
        let s = SyncConfig {
            delta: self.delta,
            alpha_hat: net.alpha_hat,
            rule,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaplibSection {
    pub mode: String,
    pub solvers: Vec<String>,
    /// Empty keeps every category.
    pub categories: Vec<String>,
    pub max_n: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for QaplibSection {
    fn default() -> Self {
        Self {
            mode: "solve".into(),
            solvers: vec!["sm".into(), "rrwm".into()],
            categories: Vec::new(),
            max_n: 150,
            epochs: 30,
            lr: 1e-2,
        }
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: RunConfig,
}

impl RunConfig {
    /// Reads a config file. A manifest written by an earlier run is also
    /// accepted; its embedded config is used.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: toml::Table = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if value.contains_key("command") && value.contains_key("config") {
            let m: ManifestConfig = toml::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
            return Ok(m.config);
        }
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
