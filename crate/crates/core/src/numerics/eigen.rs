//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiConfig {
    /// Stop once the off-diagonal Frobenius norm falls below
    /// `tol * max(1, ||S||_F)`, with `tol` raised to `16 eps` of the
    /// scalar type.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Allowed `|s_ij - s_ji|` relative to `max(1, max |s_ij|)`.
    pub symmetry_tol: f64,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_sweeps: 100,
            symmetry_tol: 1e-9,
        }
    }
}

/// Full decomposition: `values` descending, `vectors` holds the matching
/// unit eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
    pub sweeps: usize,
}

/// Leading `k` eigenpairs plus the smallest gap between consecutive
/// leading eigenvalues (infinite when `k < 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct TopEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
    pub min_gap: T,
}

impl<T: Scalar> TopEigen<T> {
    pub fn is_degenerate(&self, delta: T) -> bool {
        self.min_gap < delta
    }
}

pub fn sym_eig<T: Scalar>(s: &DenseMatrix<T>, cfg: &JacobiConfig) -> Result<SymEig<T>> {
    if !s.is_square() {
        return Err(Error::Shape(format!("eigendecomposition of a {}x{} matrix", s.rows(), s.cols())));
    }
    if s.is_empty() {
        return Err(Error::Empty("eigendecomposition input"));
    }
    if !s.all_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let scale = s.data().iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    let asym = s.asymmetry().unwrap_or(T::zero());
    if asym > T::lit(cfg.symmetry_tol) * scale {
        return Err(Error::NotSymmetric(asym.as_f64()));
    }

    let n = s.rows();
    // Symmetrize exactly so rotations see a consistent matrix.
    let mut a = DenseMatrix::from_fn(n, n, |i, j| (s[(i, j)] + s[(j, i)]) / T::lit(2.0));
    let mut v = DenseMatrix::<T>::identity(n);
    let threshold = T::lit(cfg.tol).max(T::lit(16.0) * T::epsilon()) * a.frobenius().max(T::one());

    let mut sweeps = 0;
    loop {
        if off_norm(&a) <= threshold {
            break;
        }
        if sweeps == cfg.max_sweeps {
            return Err(Error::NoConvergence {
                what: "jacobi eigensolver",
                iters: cfg.max_sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    fix_signs(&mut vectors);
    Ok(SymEig {
        values,
        vectors,
        sweeps,
    })
}

pub fn sym_eig_topk<T: Scalar>(s: &DenseMatrix<T>, k: usize) -> Result<TopEigen<T>> {
    sym_eig_topk_with(s, k, &JacobiConfig::default())
}

pub fn sym_eig_topk_with<T: Scalar>(s: &DenseMatrix<T>, k: usize, cfg: &JacobiConfig) -> Result<TopEigen<T>> {
    if k == 0 || k > s.rows() {
        return Err(Error::Invalid(format!("top-{k} eigenpairs of a {}x{} matrix", s.rows(), s.cols())));
    }
    let full = sym_eig(s, cfg)?;
    Ok(top_of(&full, k))
}

pub(crate) fn top_of<T: Scalar>(full: &SymEig<T>, k: usize) -> TopEigen<T> {
    let values: Vec<T> = full.values[..k].to_vec();
    let vectors = DenseMatrix::from_fn(full.vectors.rows(), k, |r, c| full.vectors[(r, c)]);
    TopEigen {
        min_gap: min_consecutive_gap(&values),
        values,
        vectors,
    }
}

pub fn min_consecutive_gap<T: Scalar>(descending: &[T]) -> T {
    descending
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(T::infinity(), T::min)
}

fn off_norm<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

fn rotate<T: Scalar>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (T::lit(2.0) * apq);
    let t = if theta.abs() > T::lit(1e150) {
        T::one() / (T::lit(2.0) * theta)
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for k in 0..a.rows() {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        a[(k, p)] = np;
        a[(p, k)] = np;
        a[(k, q)] = nq;
        a[(q, k)] = nq;
    }
    for k in 0..v.rows() {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Makes the largest-magnitude component of every column positive.
fn fix_signs<T: Scalar>(vectors: &mut DenseMatrix<T>) {
    for c in 0..vectors.cols() {
        let mut best = 0;
        for r in 0..vectors.rows() {
            if vectors[(r, c)].abs() > vectors[(best, c)].abs() {
                best = r;
            }
        }
        if vectors[(best, c)] < T::zero() {
            for r in 0..vectors.rows() {
                vectors[(r, c)] = -vectors[(r, c)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]).unwrap();
        let top = sym_eig_topk(&s, 2).unwrap();
        assert_eq!(top.values, vec![3.0, 2.0]);
        assert_eq!(top.vectors.col(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(top.vectors.col(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(top.min_gap, 1.0);
    }

    #[test]
    fn identity_is_degenerate() {
        let top = sym_eig_topk(&DenseMatrix::<f64>::identity(4), 2).unwrap();
        assert_eq!(top.values, vec![1.0, 1.0]);
        assert_eq!(top.min_gap, 0.0);
        assert!(top.is_degenerate(1e-4));
    }

    #[test]
    fn rejects_asymmetric() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig_topk(&s, 1), Err(Error::NotSymmetric(_))));
        assert!(sym_eig_topk(&DenseMatrix::<f64>::identity(2), 3).is_err());
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = sym_eig(&s, &JacobiConfig::default()).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - h).abs() < 1e-14 && (e.vectors[(1, 0)] - h).abs() < 1e-14);
    }
}
