use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::affinity::Sense;
use crate::autodiff::Var;
use crate::bench::accuracy;
use crate::classic::discretize;
use crate::error::{Error, Result};
use crate::ngm::loss::{perm_loss, qap_loss};
use crate::ngm::{forward, Adam, Forward, NetConfig, NetParams, OptimConfig, Problem};
use crate::numerics::{Assignment, SparseMatrix};
use crate::scalar::Scalar;

/// Training signal for one instance.
#[derive(Debug, Clone)]
pub enum Supervision<T> {
    /// Cross-entropy against a ground-truth matching.
    Permutation(Assignment),
    /// Self-supervised QAP objective on the given affinity.
    Objective { k: Arc<SparseMatrix<T>>, sense: Sense },
}

#[derive(Debug, Clone)]
pub struct Sample<T> {
    pub problem: Problem<T>,
    pub target: Supervision<T>,
}

impl<T: Scalar> Sample<T> {
    /// Loss node for a finished forward pass.
    pub fn loss(&self, fwd: &mut Forward<T>) -> Result<Var> {
        match &self.target {
            Supervision::Permutation(gt) => perm_loss(&mut fwd.tape, fwd.output, gt),
            Supervision::Objective { k, sense } => qap_loss(&mut fwd.tape, fwd.output, k, *sense),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub mean_loss: f64,
    /// Mean training accuracy over permutation-supervised samples.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub params: NetParams<T>,
    pub optimizer: Adam<T>,
    pub log: Vec<EpochRecord>,
}

/// Fresh parameters seeded from `opt.seed`, then [`train_from`].
pub fn train<T: Scalar>(dataset: &[Sample<T>], cfg: &NetConfig, opt: &OptimConfig) -> Result<TrainOutcome<T>> {
    let params = NetParams::init(cfg, opt.seed)?;
    let adam = Adam::new(*opt, params.values().iter().map(|m| m.shape()));
    train_from(dataset, cfg, params, adam, |_| {})
}

/// One instance per step, sample order reshuffled every epoch from the
/// optimizer seed and epoch index. `on_epoch` sees each record as it is
/// produced.
pub fn train_from<T: Scalar>(
    dataset: &[Sample<T>],
    cfg: &NetConfig,
    mut params: NetParams<T>,
    mut adam: Adam<T>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>> {
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    adam.cfg.validate()?;
    params.check_matches(cfg)?;
    let mut log = Vec::with_capacity(adam.cfg.epochs);
    let mut step = adam.step as usize;
    // Resumed runs continue the epoch numbering so shuffles line up with an
    // uninterrupted run.
    let first = adam.step as usize / dataset.len();
    for epoch in first..first + adam.cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(adam.cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let (mut loss_sum, mut acc_sum, mut acc_n) = (0.0, 0.0, 0usize);
        for &i in &order {
            let sample = &dataset[i];
            step += 1;
            let (loss, grads, acc) = step_grads(sample, &params, cfg).map_err(|e| match e {
                Error::NonFinite(_) => Error::Diverged { step, loss: f64::NAN },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            adam.update(params.values_mut(), &grads)?;
            loss_sum += loss;
            if let Some(a) = acc {
                acc_sum += a;
                acc_n += 1;
            }
        }
        let rec = EpochRecord {
            epoch,
            steps: order.len(),
            mean_loss: loss_sum / order.len() as f64,
            accuracy: (acc_n > 0).then(|| acc_sum / acc_n as f64),
        };
        log::info!(
            "epoch {} loss {:.6} acc {}",
            rec.epoch,
            rec.mean_loss,
            rec.accuracy.map_or("-".into(), |a| format!("{a:.4}"))
        );
        on_epoch(&rec);
        log.push(rec);
    }
    Ok(TrainOutcome {
        params,
        optimizer: adam,
        log,
    })
}

/// Loss, parameter gradients and (when supervised) accuracy of one sample.
pub fn step_grads<T: Scalar>(
    sample: &Sample<T>,
    params: &NetParams<T>,
    cfg: &NetConfig,
) -> Result<(f64, Vec<crate::numerics::DenseMatrix<T>>, Option<f64>)> {
    let mut fwd = forward(&sample.problem, params, cfg)?;
    let acc = match &sample.target {
        Supervision::Permutation(gt) => Some(accuracy(&discretize(fwd.soft())?, gt)?),
        Supervision::Objective { .. } => None,
    };
    let l = sample.loss(&mut fwd)?;
    fwd.tape.backward(l)?;
    Ok((fwd.tape.value(l)[(0, 0)].as_f64(), fwd.param_grads(), acc))
}
