use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::bench::{accuracy, SynthConfig, SynthSample};
use crate::classic::discretize;
use crate::error::{Error, Result};
use crate::multigraph::joint::{pair_list, synchronize_on, SyncConfig, SyncInfo};
use crate::ngm::{forward_on, load_params, perm_loss, Adam, EpochRecord, NetConfig, NetParams, OptimConfig, Problem, TrainOutcome};
use crate::numerics::{Assignment, DenseMatrix};
use crate::scalar::Scalar;

/// Pairwise problems of one multi-graph sample, in [`pair_list`] order.
#[derive(Debug, Clone)]
pub struct MultiSample<T> {
    pub m: usize,
    pub n: usize,
    pub problems: Vec<Problem<T>>,
    pub gts: Vec<Assignment>,
}

impl MultiSample<f64> {
    /// All `i < j` pairs of a generated sample. Graphs must be outlier-free.
    pub fn from_synth(s: &SynthSample, cfg: &SynthConfig) -> Result<Self> {
        let m = s.num_graphs();
        let n = s.graphs.first().map_or(0, |g| g.len());
        if s.graphs.iter().any(|g| g.len() != n) {
            return Err(Error::Invalid("multi-graph matching needs equal node counts".into()));
        }
        let mut problems = Vec::new();
        let mut gts = Vec::new();
        for (i, j) in pair_list(m) {
            let pair = s.pair(i, j, cfg)?;
            problems.push(Problem::new(&pair.association()?)?);
            gts.push(pair.gt);
        }
        Ok(Self { m, n, problems, gts })
    }
}

impl<T: Scalar> MultiSample<T> {
    pub fn cast<U: Scalar>(&self) -> MultiSample<U> {
        MultiSample {
            m: self.m,
            n: self.n,
            problems: self.problems.iter().map(Problem::cast).collect(),
            gts: self.gts.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiForward<T> {
    pub tape: Tape<T>,
    pub params: Vec<Var>,
    /// Pairwise NGM outputs.
    pub pairwise: Vec<Var>,
    /// Synchronized outputs.
    pub synced: Vec<Var>,
    pub info: SyncInfo,
}

impl<T: Scalar> MultiForward<T> {
    pub fn synced_values(&self) -> Vec<DenseMatrix<T>> {
        self.synced.iter().map(|&v| self.tape.value(v).clone()).collect()
    }

    pub fn pairwise_values(&self) -> Vec<DenseMatrix<T>> {
        self.pairwise.iter().map(|&v| self.tape.value(v).clone()).collect()
    }

    /// Sum of the permutation losses of the synchronized outputs.
    pub fn loss(&mut self, gts: &[Assignment]) -> Result<Var> {
        let mut total: Option<Var> = None;
        for (&s, gt) in self.synced.iter().zip(gts) {
            let l = perm_loss(&mut self.tape, s, gt)?;
            total = Some(match total {
                Some(t) => self.tape.add(t, l)?,
                None => l,
            });
        }
        total.ok_or(Error::Empty("multi-graph loss"))
    }
}

/// NGM on every pair (shared parameters), then synchronization.
pub fn nmgm_forward<T: Scalar>(sample: &MultiSample<T>, params: &NetParams<T>, cfg: &NetConfig, sync: &SyncConfig) -> Result<MultiForward<T>> {
    cfg.validate()?;
    params.check_matches(cfg)?;
    if sample.m < 2 {
        return Err(Error::Invalid(format!("{} graphs; multi-graph matching needs at least 2", sample.m)));
    }
    let mut tape = Tape::new();
    let pv = load_params(&mut tape, params);
    let mut pairwise = Vec::with_capacity(sample.problems.len());
    for p in &sample.problems {
        pairwise.push(forward_on(&mut tape, &pv, p, params, cfg)?.0);
    }
    let (synced, info) = synchronize_on(&mut tape, &pairwise, sample.m, sample.n, sync, cfg)?;
    Ok(MultiForward {
        tape,
        params: pv,
        pairwise,
        synced,
        info,
    })
}

/// Loss, parameter gradients and mean synchronized accuracy of one sample.
pub fn nmgm_step_grads<T: Scalar>(
    sample: &MultiSample<T>,
    params: &NetParams<T>,
    cfg: &NetConfig,
    sync: &SyncConfig,
) -> Result<(f64, Vec<DenseMatrix<T>>, f64)> {
    let mut fwd = nmgm_forward(sample, params, cfg, sync)?;
    let acc = mean_accuracy(&fwd.synced_values(), &sample.gts)?;
    let l = fwd.loss(&sample.gts)?;
    fwd.tape.backward(l)?;
    let grads = fwd.params.iter().map(|&v| fwd.tape.grad_or_zero(v)).collect();
    Ok((fwd.tape.value(l)[(0, 0)].as_f64(), grads, acc))
}

pub fn mean_accuracy<T: Scalar>(soft: &[DenseMatrix<T>], gts: &[Assignment]) -> Result<f64> {
    if soft.is_empty() {
        return Err(Error::Empty("accuracy input"));
    }
    let mut sum = 0.0;
    for (s, gt) in soft.iter().zip(gts) {
        sum += accuracy(&discretize(s)?, gt)?;
    }
    Ok(sum / soft.len() as f64)
}

/// Joint training through the synchronization head, one sample per step.
pub fn train_nmgm<T: Scalar>(
    dataset: &[MultiSample<T>],
    cfg: &NetConfig,
    sync: &SyncConfig,
    mut params: NetParams<T>,
    mut adam: Adam<T>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    adam.cfg.validate()?;
    let mut log = Vec::with_capacity(adam.cfg.epochs);
    let mut step = adam.step as usize;
    // Resumed runs continue the epoch numbering so shuffles line up with an
    // uninterrupted run.
    let first = adam.step as usize / dataset.len();
    for epoch in first..first + adam.cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(adam.cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let (mut loss_sum, mut acc_sum) = (0.0, 0.0);
        for &i in &order {
            step += 1;
            let (loss, grads, acc) = nmgm_step_grads(&dataset[i], &params, cfg, sync).map_err(|e| match e {
                Error::NonFinite(_) => Error::Diverged { step, loss: f64::NAN },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            adam.update(params.values_mut(), &grads)?;
            loss_sum += loss;
            acc_sum += acc;
        }
        let rec = EpochRecord {
            epoch,
            steps: order.len(),
            mean_loss: loss_sum / order.len() as f64,
            accuracy: Some(acc_sum / order.len() as f64),
        };
        log::info!("nmgm epoch {} loss {:.6} acc {:.4}", rec.epoch, rec.mean_loss, acc_sum / order.len() as f64);
        on_epoch(&rec);
        log.push(rec);
    }
    Ok(TrainOutcome {
        params,
        optimizer: adam,
        log,
    })
}

/// Fresh parameters seeded from `opt.seed`, then [`train_nmgm`].
pub fn train_nmgm_fresh<T: Scalar>(dataset: &[MultiSample<T>], cfg: &NetConfig, sync: &SyncConfig, opt: &OptimConfig) -> Result<TrainOutcome<T>> {
    let params = NetParams::init(cfg, opt.seed)?;
    let adam = Adam::new(*opt, params.values().iter().map(|m| m.shape()));
    train_nmgm(dataset, cfg, sync, params, adam, |_| {})
}
