use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// Default cap on the number of entries a Kronecker product may produce
/// (a 40-node QAPLIB instance needs 1600^2 = 2.56M).
pub const DEFAULT_KRON_CAP: usize = 1 << 24;

/// Kronecker product `a ⊗ b`: block `(i, j)` of the result is `a[i,j] * b`.
///
/// With column-stacking vectorization, `vec(X)^T (F2ᵀ ⊗ F1) vec(X) =
/// tr(Xᵀ F1 X F2)`; for symmetric `F2` this is the familiar `F2 ⊗ F1`.
pub fn kron<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    kron_capped(a, b, DEFAULT_KRON_CAP)
}

pub fn kron_capped<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, cap: usize) -> Result<DenseMatrix<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("kronecker factor"));
    }
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    match (rows, cols) {
        (Some(r), Some(c)) if r.checked_mul(c).is_some_and(|n| n <= cap) => {
            let mut out = DenseMatrix::zeros(r, c);
            for i in 0..a.rows() {
                for j in 0..a.cols() {
                    let s = a[(i, j)];
                    if s == T::zero() {
                        continue;
                    }
                    for p in 0..b.rows() {
                        for q in 0..b.cols() {
                            out[(i * b.rows() + p, j * b.cols() + q)] = s * b[(p, q)];
                        }
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::SizeCap {
            rows: rows.unwrap_or(usize::MAX),
            cols: cols.unwrap_or(usize::MAX),
            cap,
        }),
    }
}
