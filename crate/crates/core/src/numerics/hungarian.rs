use crate::error::{Error, Result};
use crate::numerics::{Assignment, DenseMatrix};
use crate::scalar::Scalar;

/// Maximum-score assignment of every row to a distinct column (`rows <=
/// cols`), via the O(n^2 m) shortest augmenting path method with dual
/// potentials.
///
/// Among equal-score candidates, earlier rows prefer lower column indices.
pub fn hungarian<T: Scalar>(score: &DenseMatrix<T>) -> Result<Assignment> {
    let (n, m) = score.shape();
    if n == 0 || m == 0 {
        return Err(Error::Empty("assignment score matrix"));
    }
    if n > m {
        return Err(Error::Shape(format!(
            "{n}x{m} score matrix has more rows than columns"
        )));
    }
    if !score.all_finite() {
        return Err(Error::NonFinite("assignment score matrix"));
    }

    // Minimize cost = -score. Index 0 is the virtual row/column.
    let cost = |i: usize, j: usize| -score[(i - 1, j - 1)];
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    Assignment::new(m, col_of_row)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_diagonal() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[0.9, 0.1], &[0.2, 0.8]]).unwrap();
        let x = hungarian(&s).unwrap();
        assert_eq!(x, Assignment::identity(2));
        assert!((x.score(&s) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn single_entry() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[5.0]]).unwrap();
        assert_eq!(hungarian(&s).unwrap().to_dense::<f64>().data(), &[1.0]);
    }

    #[test]
    fn uniform_ties_resolve_to_identity() {
        let s = DenseMatrix::<f64>::filled(2, 2, 0.5);
        assert_eq!(hungarian(&s).unwrap(), Assignment::identity(2));
    }

    #[test]
    fn rectangular_leaves_columns_free() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[0.0, 1.0, 5.0], &[0.0, 4.0, 6.0]]).unwrap();
        let x = hungarian(&s).unwrap();
        assert_eq!(x.col_of_row(), &[2, 1]);
    }

    #[test]
    fn errors() {
        assert!(hungarian(&DenseMatrix::<f64>::zeros(0, 3)).is_err());
        assert!(hungarian(&DenseMatrix::<f64>::zeros(3, 2)).is_err());
    }
}
