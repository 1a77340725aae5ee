//! Reweighted random walk matching.

use crate::classic::spectral::l2_diff;
use crate::classic::SoftMatch;
use crate::error::{Error, Result};
use crate::numerics::{sinkhorn, DenseMatrix, SinkhornConfig, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrwmConfig {
    /// Weight of the reweighting jump; 0 reduces to a plain random walk.
    pub alpha_jump: f64,
    /// Inflation exponent applied before the Sinkhorn projection.
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub sinkhorn: SinkhornConfig,
}

impl Default for RrwmConfig {
    fn default() -> Self {
        Self {
            alpha_jump: 0.2,
            beta: 30.0,
            tol: 1e-6,
            max_iter: 300,
            sinkhorn: SinkhornConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrwmOutcome<T> {
    /// Stationary distribution reshaped to `n1 x n2` (sums to one).
    pub soft: SoftMatch<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Random walk on the association graph with a Sinkhorn-projected
/// reweighting jump:
///
/// ```text
/// x̄ = P x / |P x|_1,   P = K / max_row_sum(K)
/// y = sinkhorn(exp(beta * x̄ / max x̄)),  y /= |y|_1
/// x ← normalize_1(alpha_jump * y + (1 - alpha_jump) * x̄)
/// ```
///
/// Non-convergence within `max_iter` is not an error: the last iterate is
/// returned with `converged = false`.
pub fn rrwm<T: Scalar>(k: &SparseMatrix<T>, n1: usize, n2: usize, cfg: &RrwmConfig) -> Result<RrwmOutcome<T>> {
    let n = n1 * n2;
    if n == 0 {
        return Err(Error::Empty("rrwm instance"));
    }
    if k.rows() != n || k.cols() != n {
        return Err(Error::Shape(format!("{}x{} affinity for {n1}x{n2} matching", k.rows(), k.cols())));
    }
    if !(0.0..=1.0).contains(&cfg.alpha_jump) {
        return Err(Error::Config(format!("alpha_jump = {} outside [0, 1]", cfg.alpha_jump)));
    }
    if !(cfg.beta > 0.0) {
        return Err(Error::Config(format!("beta = {} must be positive", cfg.beta)));
    }
    if k.values().iter().any(|&v| v < T::zero()) {
        return Err(Error::Invalid("rrwm needs a nonnegative affinity matrix".into()));
    }
    let dmax = (0..n)
        .map(|r| k.row(r).map(|(_, v)| v).sum::<T>())
        .fold(T::zero(), T::max);
    if dmax == T::zero() {
        return Err(Error::Degenerate("affinity matrix is zero".into()));
    }
    let p = k.map_values(|v| v / dmax);
    let alpha = T::lit(cfg.alpha_jump);
    let beta = T::lit(cfg.beta);
    let tol = T::lit(cfg.tol);

    let mut x = vec![T::one() / T::of_usize(n); n];
    for it in 1..=cfg.max_iter {
        let mut walk = p.matvec(&x)?;
        let s1: T = walk.iter().copied().sum();
        if s1 <= T::zero() {
            return Err(Error::Degenerate("random walk lost all mass".into()));
        }
        walk.iter_mut().for_each(|v| *v /= s1);

        let next = if alpha == T::zero() {
            walk
        } else {
            let peak = walk.iter().copied().fold(T::zero(), T::max);
            let inflated: Vec<T> = walk.iter().map(|&v| (beta * v / peak).exp()).collect();
            let projected = sinkhorn(&DenseMatrix::from_vec_col(n1, n2, &inflated)?, &cfg.sinkhorn)?.valid();
            let mut jump = projected.vec();
            let js: T = jump.iter().copied().sum();
            jump.iter_mut().for_each(|v| *v /= js);
            let mut mixed: Vec<T> = jump
                .iter()
                .zip(&walk)
                .map(|(&j, &w)| alpha * j + (T::one() - alpha) * w)
                .collect();
            let ms: T = mixed.iter().copied().sum();
            mixed.iter_mut().for_each(|v| *v /= ms);
            mixed
        };
        let diff = l2_diff(&x, &next);
        x = next;
        if diff < tol {
            return Ok(RrwmOutcome {
                soft: DenseMatrix::from_vec_col(n1, n2, &x)?,
                iterations: it,
                converged: true,
            });
        }
    }
    log::warn!("rrwm did not converge within {} iterations", cfg.max_iter);
    Ok(RrwmOutcome {
        soft: DenseMatrix::from_vec_col(n1, n2, &x)?,
        iterations: cfg.max_iter,
        converged: false,
    })
}
