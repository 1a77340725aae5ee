use crate::affinity::qap::{QapForm, QapInstance};
use crate::error::{Error, Result};
use crate::numerics::SparseMatrix;
use crate::scalar::Scalar;

/// Association graph of a Lawler instance: one vertex per candidate
/// correspondence `(i, a)` (column-stacked index `i + n1 a`), edges from the
/// off-diagonal affinities.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationGraph<T> {
    pub n1: usize,
    pub n2: usize,
    /// Off-diagonal affinities restricted to positive entries.
    pub w: SparseMatrix<T>,
    /// Initial single-channel vertex attributes.
    pub v0: Vec<T>,
    /// Column-normalized binary adjacency `A ⊘ (1 1ᵀ A)`; same pattern as `w`.
    pub a_norm: SparseMatrix<T>,
}

impl<T: Scalar> AssociationGraph<T> {
    pub fn num_vertices(&self) -> usize {
        self.n1 * self.n2
    }

    /// Hadamard product `A' ⊙ W`, the propagation matrix used for message
    /// passing.
    pub fn propagation(&self) -> SparseMatrix<T> {
        let mut vals = self.a_norm.values().iter();
        self.w.map_values(|w| w * *vals.next().expect("a_norm shares the pattern of w"))
    }
}

/// Splits `K` into edge weights and vertex attributes.
///
/// Vertex attributes come from the diagonal of `K`; a diagonal that is
/// entirely zero is replaced by ones. The adjacency `A` is the positive
/// off-diagonal support; each of its columns is normalized to sum to one.
pub fn build_association<T: Scalar>(inst: &QapInstance<T>) -> Result<AssociationGraph<T>> {
    let QapForm::Lawler { k, n1, n2 } = &inst.form else {
        return Err(Error::Invalid("association graph needs a Lawler-form instance".into()));
    };
    association_from_affinity(k, *n1, *n2)
}

pub fn association_from_affinity<T: Scalar>(k: &SparseMatrix<T>, n1: usize, n2: usize) -> Result<AssociationGraph<T>> {
    let n = n1 * n2;
    if k.rows() != n || k.cols() != n {
        return Err(Error::Shape(format!("{}x{} affinity for {n1}x{n2} matching", k.rows(), k.cols())));
    }
    let edges: Vec<(usize, usize, T)> = k.triplets().filter(|&(r, c, v)| r != c && v > T::zero()).collect();
    if edges.is_empty() {
        return Err(Error::EmptyAssociation);
    }
    let mut col_count = vec![0usize; n];
    for &(_, c, _) in &edges {
        col_count[c] += 1;
    }
    let a_entries = edges
        .iter()
        .map(|&(r, c, _)| (r, c, T::one() / T::of_usize(col_count[c])))
        .collect();
    let a_norm = SparseMatrix::from_triplets(n, n, a_entries)?;
    let w = SparseMatrix::from_triplets(n, n, edges)?;

    let diag = k.diagonal();
    let v0 = if diag.iter().all(|&d| d == T::zero()) {
        vec![T::one(); n]
    } else {
        diag
    };
    if v0.iter().any(|&v| v < T::zero()) {
        return Err(Error::Invalid("negative vertex affinity on the diagonal of K".into()));
    }
    Ok(AssociationGraph { n1, n2, w, v0, a_norm })
}
