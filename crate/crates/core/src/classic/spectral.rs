use crate::classic::SoftMatch;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub max_iter: usize,
    /// Stop when successive unit iterates differ by less than this (L2).
    pub tol: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome<T> {
    pub soft: SoftMatch<T>,
    pub eigenvalue: T,
    pub iterations: usize,
}

/// Leading eigenvector of `K` reshaped to `n1 x n2`.
pub fn spectral_match<T: Scalar>(k: &SparseMatrix<T>, n1: usize, n2: usize) -> Result<SoftMatch<T>> {
    spectral_match_with(k, n1, n2, &PowerConfig::default()).map(|o| o.soft)
}

/// Power iteration from the all-ones vector; the result is made
/// entrywise nonnegative and L2-normalized.
pub fn spectral_match_with<T: Scalar>(
    k: &SparseMatrix<T>,
    n1: usize,
    n2: usize,
    cfg: &PowerConfig,
) -> Result<SpectralOutcome<T>> {
    let n = n1 * n2;
    if n == 0 {
        return Err(Error::Empty("spectral matching instance"));
    }
    if k.rows() != n || k.cols() != n {
        return Err(Error::Shape(format!("{}x{} affinity for {n1}x{n2} matching", k.rows(), k.cols())));
    }
    let tol = T::lit(cfg.tol);
    let mut x = vec![T::one() / T::of_usize(n).sqrt(); n];
    let mut lambda = T::zero();
    for it in 1..=cfg.max_iter {
        let mut y = k.matvec(&x)?;
        let norm = l2(&y);
        if norm == T::zero() {
            return Err(Error::Degenerate("affinity matrix annihilates the iterate".into()));
        }
        if !norm.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let diff = l2_diff(&x, &y);
        lambda = norm;
        x = y;
        if diff < tol {
            let soft = DenseMatrix::from_vec_col(n1, n2, &x.iter().map(|v| v.abs()).collect::<Vec<_>>())?;
            return Ok(SpectralOutcome {
                soft,
                eigenvalue: lambda,
                iterations: it,
            });
        }
    }
    log::debug!("power iteration stopped at lambda = {lambda}");
    Err(Error::NoConvergence {
        what: "spectral matching power iteration",
        iters: cfg.max_iter,
    })
}

pub(crate) fn l2<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

pub(crate) fn l2_diff<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}
