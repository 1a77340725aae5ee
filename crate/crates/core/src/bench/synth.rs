//! Random point-registration instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::affinity::{
    build_affinity_matrix, build_affinity_tensor, build_association, delaunay, fully_connected, AssociationGraph, Graph,
    PointSet, QapForm, QapInstance, DEFAULT_SIGMA2, DEFAULT_SIGMA3,
};
use crate::error::{Error, Result};
use crate::numerics::{Assignment, SparseMatrix, SparseTensor3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub num_sets: usize,
    pub train_per_set: usize,
    pub test_per_set: usize,
    pub inliers: usize,
    pub outliers: usize,
    /// Standard deviation of the per-coordinate Gaussian perturbation.
    pub sigma_n: f64,
    pub scale_low: f64,
    pub scale_high: f64,
    /// Edge-length kernel bandwidth.
    pub sigma2: f64,
    /// Angle kernel bandwidth (third order).
    pub sigma3: f64,
    /// Build third-order tensors alongside the affinity matrices.
    pub hyper: bool,
    /// Randomly permute target node order (ground truth is then a random
    /// permutation rather than the identity).
    pub shuffle_target: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_sets: 10,
            train_per_set: 200,
            test_per_set: 100,
            inliers: 10,
            outliers: 0,
            sigma_n: 0.0,
            scale_low: 1.0,
            scale_high: 1.0,
            sigma2: DEFAULT_SIGMA2,
            sigma3: DEFAULT_SIGMA3,
            hyper: false,
            shuffle_target: true,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_sets == 0 || self.train_per_set + self.test_per_set == 0 {
            return Err(Error::Config("need at least one set and one sample per set".into()));
        }
        if self.inliers < 3 {
            return Err(Error::Config(format!("{} inliers; triangulation needs at least 3", self.inliers)));
        }
        if !(self.sigma_n >= 0.0) || !self.sigma_n.is_finite() {
            return Err(Error::Config(format!("sigma_n = {} must be >= 0", self.sigma_n)));
        }
        if !(self.scale_low > 0.0) || !(self.scale_low <= self.scale_high) || !self.scale_high.is_finite() {
            return Err(Error::Config(format!(
                "scale range [{}, {}] must be positive and ordered",
                self.scale_low, self.scale_high
            )));
        }
        if !(self.sigma2 > 0.0) || !(self.sigma3 > 0.0) {
            return Err(Error::Config("kernel bandwidths must be positive".into()));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.num_sets * (self.train_per_set + self.test_per_set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// One sample: several observed point sets of the same ground-truth
/// configuration. `order[g][p]` is the node index of ground-truth point `p`
/// in graph `g`; nodes beyond the inliers are outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub set: usize,
    pub index: usize,
    pub split: Split,
    pub graphs: Vec<PointSet>,
    pub order: Vec<Vec<usize>>,
}

/// A fully built two-graph instance.
#[derive(Debug, Clone)]
pub struct PairInstance {
    pub g1: Graph,
    pub g2: Graph,
    pub gt: Assignment,
    pub instance: QapInstance<f64>,
    pub tensor: Option<SparseTensor3<f64>>,
}

impl PairInstance {
    pub fn affinity(&self) -> &SparseMatrix<f64> {
        match &self.instance.form {
            QapForm::Lawler { k, .. } => k,
            QapForm::KoopmansBeckmann { .. } => unreachable!("synthetic instances are built in Lawler form"),
        }
    }

    pub fn association(&self) -> Result<AssociationGraph<f64>> {
        build_association(&self.instance)
    }
}

impl SynthSample {
    pub fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    /// Ground truth from graph `i` to graph `j` over the inlier nodes of `i`
    /// (graph `i` must not contain outliers).
    pub fn ground_truth(&self, i: usize, j: usize) -> Result<Assignment> {
        let inliers = self.order[i].len();
        if self.graphs[i].len() != inliers {
            return Err(Error::Invalid(format!("graph {i} has outliers and cannot be the reference")));
        }
        let mut point_of = vec![0; inliers];
        for (p, &node) in self.order[i].iter().enumerate() {
            point_of[node] = p;
        }
        Assignment::new(self.graphs[j].len(), point_of.iter().map(|&p| self.order[j][p]).collect())
    }

    /// Reference graph `i` (Delaunay) against target graph `j` (fully
    /// connected).
    pub fn pair(&self, i: usize, j: usize, cfg: &SynthConfig) -> Result<PairInstance> {
        let gt = self.ground_truth(i, j)?;
        let g1 = delaunay(&self.graphs[i])?;
        let g2 = fully_connected(&self.graphs[j])?;
        let instance = build_affinity_matrix::<f64>(&g1, &g2, cfg.sigma2, None)?;
        let tensor = if cfg.hyper {
            Some(build_affinity_tensor::<f64>(&g1, &g2, cfg.sigma3)?)
        } else {
            None
        };
        Ok(PairInstance {
            g1,
            g2,
            gt,
            instance,
            tensor,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub cfg: SynthConfig,
    /// Graphs per sample (2 for pairwise data).
    pub graphs_per_sample: usize,
    pub train: Vec<SynthSample>,
    pub test: Vec<SynthSample>,
}

impl SynthDataset {
    pub fn samples(&self, split: Split) -> &[SynthSample] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }
}

/// Deterministic per-sample stream so that any sample can be regenerated
/// on its own.
fn sample_rng(seed: u64, set: usize, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (set as u64).wrapping_mul(0xA076_1D64_78BD_642F));
    rng.set_stream(((index as u64) << 1) | u64::from(split == Split::Test));
    rng
}

fn unit_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect()
}

fn observe(rng: &mut ChaCha8Rng, truth: &[[f64; 2]], cfg: &SynthConfig) -> Result<(PointSet, Vec<usize>)> {
    let noise = Normal::new(0.0, cfg.sigma_n).map_err(|e| Error::Config(e.to_string()))?;
    let s = if cfg.scale_low == cfg.scale_high {
        cfg.scale_low
    } else {
        rng.random_range(cfg.scale_low..=cfg.scale_high)
    };
    let mut pts: Vec<[f64; 2]> = truth
        .iter()
        .map(|p| [s * p[0] + noise.sample(rng), s * p[1] + noise.sample(rng)])
        .collect();
    pts.extend(unit_points(rng, cfg.outliers));
    let mut perm: Vec<usize> = (0..pts.len()).collect();
    if cfg.shuffle_target {
        perm.shuffle(rng);
    }
    // perm[p] is the node index of point p.
    let mut shuffled = vec![[0.0; 2]; pts.len()];
    for (p, &node) in perm.iter().enumerate() {
        shuffled[node] = pts[p];
    }
    Ok((PointSet::new(shuffled)?, perm[..truth.len()].to_vec()))
}

fn generate(cfg: &SynthConfig, graphs: usize) -> Result<SynthDataset> {
    cfg.validate()?;
    if graphs < 2 {
        return Err(Error::Config("samples need at least two graphs".into()));
    }
    if graphs > 2 && cfg.outliers > 0 {
        return Err(Error::Config("multi-graph samples assume no outliers".into()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for set in 0..cfg.num_sets {
        let mut set_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        set_rng.set_stream(u64::MAX - set as u64);
        let truth = unit_points(&mut set_rng, cfg.inliers);
        for (split, count) in [(Split::Train, cfg.train_per_set), (Split::Test, cfg.test_per_set)] {
            for index in 0..count {
                let mut rng = sample_rng(cfg.seed, set, split, index);
                let (mut gs, mut order) = (Vec::new(), Vec::new());
                if graphs == 2 {
                    gs.push(PointSet::new(truth.clone())?);
                    order.push((0..cfg.inliers).collect());
                    let (p, o) = observe(&mut rng, &truth, cfg)?;
                    gs.push(p);
                    order.push(o);
                } else {
                    for _ in 0..graphs {
                        let (p, o) = observe(&mut rng, &truth, cfg)?;
                        gs.push(p);
                        order.push(o);
                    }
                }
                let s = SynthSample {
                    set,
                    index,
                    split,
                    graphs: gs,
                    order,
                };
                match split {
                    Split::Train => train.push(s),
                    Split::Test => test.push(s),
                }
            }
        }
    }
    Ok(SynthDataset {
        cfg: *cfg,
        graphs_per_sample: graphs,
        train,
        test,
    })
}

/// Pairwise data: graph 0 holds the ground-truth points (identity order),
/// graph 1 the scaled, perturbed and shuffled observation plus outliers.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<SynthDataset> {
    generate(cfg, 2)
}

/// Multi-graph data: `m` independent observations of each ground-truth set.
pub fn gen_multi(cfg: &SynthConfig, m: usize) -> Result<SynthDataset> {
    generate(cfg, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            num_sets: 2,
            train_per_set: 3,
            test_per_set: 2,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn sizes_and_determinism() {
        let cfg = small();
        let a = gen_synthetic(&cfg).unwrap();
        assert_eq!(a.train.len() + a.test.len(), cfg.total_samples());
        assert_eq!(a, gen_synthetic(&cfg).unwrap());
        let b = gen_synthetic(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn outliers_widen_the_target() {
        let cfg = SynthConfig { outliers: 2, ..small() };
        let d = gen_synthetic(&cfg).unwrap();
        let p = d.train[0].pair(0, 1, &cfg).unwrap();
        assert_eq!((p.gt.rows(), p.gt.cols()), (10, 12));
        assert_eq!(p.instance.sizes(), (10, 12));
    }

    #[test]
    fn multi_graph_ground_truth_composes() {
        let cfg = SynthConfig { sigma_n: 0.02, ..small() };
        let d = gen_multi(&cfg, 4).unwrap();
        let s = &d.train[0];
        let g01 = s.ground_truth(0, 1).unwrap();
        let g12 = s.ground_truth(1, 2).unwrap();
        let g02 = s.ground_truth(0, 2).unwrap();
        for r in 0..10 {
            assert_eq!(g12.col_of_row()[g01.col_of_row()[r]], g02.col_of_row()[r]);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(gen_synthetic(&SynthConfig { inliers: 2, ..small() }).is_err());
        assert!(gen_synthetic(&SynthConfig { sigma_n: -1.0, ..small() }).is_err());
        assert!(gen_synthetic(&SynthConfig { scale_low: 2.0, ..small() }).is_err());
        assert!(gen_multi(&SynthConfig { outliers: 1, ..small() }, 3).is_err());
    }
}
