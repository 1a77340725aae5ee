use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::scalar::Scalar;

/// Binary partial permutation `X` with `X 1 = 1` and `Xᵀ 1 <= 1`: every row
/// is matched to exactly one column, every column to at most one row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    cols: usize,
    col_of_row: Vec<usize>,
}

impl Assignment {
    pub fn new(cols: usize, col_of_row: Vec<usize>) -> Result<Self> {
        let mut used = vec![false; cols];
        for (i, &c) in col_of_row.iter().enumerate() {
            if c >= cols {
                return Err(Error::Constraint(format!("row {i} mapped to column {c} of {cols}")));
            }
            if std::mem::replace(&mut used[c], true) {
                return Err(Error::Constraint(format!("column {c} used twice")));
            }
        }
        Ok(Self { cols, col_of_row })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            cols: n,
            col_of_row: (0..n).collect(),
        }
    }

    /// Reads a 0/1 matrix, validating the one-to-one constraints.
    pub fn from_dense<T: Scalar>(x: &DenseMatrix<T>) -> Result<Self> {
        let mut col_of_row = Vec::with_capacity(x.rows());
        for i in 0..x.rows() {
            let mut hit = None;
            for (j, &v) in x.row(i).iter().enumerate() {
                if v == T::one() {
                    if hit.is_some() {
                        return Err(Error::Constraint(format!("row {i} has several ones")));
                    }
                    hit = Some(j);
                } else if v != T::zero() {
                    return Err(Error::Constraint(format!("entry ({i},{j}) = {v} is not binary")));
                }
            }
            col_of_row.push(hit.ok_or_else(|| Error::Constraint(format!("row {i} is unmatched")))?);
        }
        Self::new(x.cols(), col_of_row)
    }

    pub fn rows(&self) -> usize {
        self.col_of_row.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col_of_row(&self) -> &[usize] {
        &self.col_of_row
    }

    pub fn get(&self, i: usize, a: usize) -> bool {
        self.col_of_row[i] == a
    }

    pub fn to_dense<T: Scalar>(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.rows(), self.cols, |i, a| {
            if self.col_of_row[i] == a {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Column-stacked indicator vector.
    pub fn vec<T: Scalar>(&self) -> Vec<T> {
        let n1 = self.rows();
        let mut v = vec![T::zero(); n1 * self.cols];
        for (i, &a) in self.col_of_row.iter().enumerate() {
            v[i + n1 * a] = T::one();
        }
        v
    }

    pub fn score<T: Scalar>(&self, s: &DenseMatrix<T>) -> T {
        self.col_of_row
            .iter()
            .enumerate()
            .map(|(i, &a)| s[(i, a)])
            .sum()
    }

    /// `self ∘ other`: row `i` goes to `other.col_of_row[self.col_of_row[i]]`.
    pub fn compose(&self, other: &Assignment) -> Result<Assignment> {
        if self.cols != other.rows() {
            return Err(Error::Shape("composition of incompatible assignments".into()));
        }
        Assignment::new(
            other.cols,
            self.col_of_row.iter().map(|&c| other.col_of_row[c]).collect(),
        )
    }

    /// Inverse of a square assignment.
    pub fn inverse(&self) -> Result<Assignment> {
        if self.rows() != self.cols {
            return Err(Error::Shape("inverse of a non-square assignment".into()));
        }
        let mut inv = vec![0; self.cols];
        for (i, &c) in self.col_of_row.iter().enumerate() {
            inv[c] = i;
        }
        Assignment::new(self.rows(), inv)
    }
}
