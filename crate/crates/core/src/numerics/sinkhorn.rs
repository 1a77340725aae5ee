//! Sinkhorn normalization with dummy-row padding for rectangular inputs.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    /// Value of the dummy rows appended when the input has fewer rows than
    /// columns.
    pub eps: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

/// Output of [`sinkhorn`]. `matrix` is the padded square matrix in the
/// (possibly transposed) orientation that was iterated; use
/// [`DoublyStochasticResult::valid`] for the caller-shaped block.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyStochasticResult<T> {
    pub matrix: DenseMatrix<T>,
    pub valid_rows: usize,
    pub valid_cols: usize,
    pub iterations_used: usize,
    pub residual: T,
    pub converged: bool,
    /// The input had more rows than columns and was normalized transposed.
    pub transposed: bool,
}

impl<T: Scalar> DoublyStochasticResult<T> {
    /// Drops dummy rows and restores the input orientation.
    pub fn valid(&self) -> DenseMatrix<T> {
        let block = DenseMatrix::from_fn(self.valid_rows, self.valid_cols, |i, j| self.matrix[(i, j)]);
        if self.transposed {
            block.transpose()
        } else {
            block
        }
    }
}

/// Alternating column/row normalization until every row and column sum of
/// the padded square matrix is within `tol` of one, or `max_iter` rounds.
pub fn sinkhorn<T: Scalar>(s: &DenseMatrix<T>, cfg: &SinkhornConfig) -> Result<DoublyStochasticResult<T>> {
    if s.is_empty() {
        return Err(Error::Empty("sinkhorn input"));
    }
    if !s.all_finite() {
        return Err(Error::NonFinite("sinkhorn input"));
    }
    if s.data().iter().any(|&v| v < T::zero()) {
        return Err(Error::Invalid("sinkhorn input has negative entries".into()));
    }
    let transposed = s.rows() > s.cols();
    let oriented = if transposed { s.transpose() } else { s.clone() };
    let (n1, n2) = oriented.shape();

    let eps = T::lit(cfg.eps);
    let mut m = DenseMatrix::from_fn(n2, n2, |i, j| if i < n1 { oriented[(i, j)] } else { eps });
    if let Some(i) = m.row_sums().iter().position(|&r| r <= T::zero()) {
        return Err(Error::Degenerate(format!("row {i} is all zeros")));
    }
    if let Some(j) = m.col_sums().iter().position(|&c| c <= T::zero()) {
        return Err(Error::Degenerate(format!("column {j} is all zeros")));
    }

    let tol = T::lit(cfg.tol);
    let mut residual = stochastic_residual(&m);
    let mut iters = 0;
    while residual > tol && iters < cfg.max_iter {
        normalize_cols(&mut m);
        normalize_rows(&mut m);
        iters += 1;
        residual = stochastic_residual(&m);
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("sinkhorn iterate"));
    }
    Ok(DoublyStochasticResult {
        matrix: m,
        valid_rows: n1,
        valid_cols: n2,
        iterations_used: iters,
        residual,
        converged: residual <= tol,
        transposed,
    })
}

pub(crate) fn normalize_rows<T: Scalar>(m: &mut DenseMatrix<T>) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let s: T = row.iter().copied().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
}

pub(crate) fn normalize_cols<T: Scalar>(m: &mut DenseMatrix<T>) {
    let sums = m.col_sums();
    for i in 0..m.rows() {
        for (v, &s) in m.row_mut(i).iter_mut().zip(&sums) {
            *v /= s;
        }
    }
}

/// Largest deviation of any row or column sum from one.
pub fn stochastic_residual<T: Scalar>(m: &DenseMatrix<T>) -> T {
    m.row_sums()
        .into_iter()
        .chain(m.col_sums())
        .map(|s| (s - T::one()).abs())
        .fold(T::zero(), T::max)
}
