use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric third-order sparse tensor.
///
/// Each entry is stored once with sorted indices `i <= j <= k`; every
/// permutation of the index triple implicitly carries the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor3<T> {
    dim: usize,
    entries: Vec<([usize; 3], T)>,
}

impl<T: Scalar> SparseTensor3<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Canonicalizes the index order of every entry. Two entries that are
    /// permutations of each other are a duplicate and rejected.
    pub fn from_entries(dim: usize, entries: Vec<([usize; 3], T)>) -> Result<Self> {
        let mut canon = Vec::with_capacity(entries.len());
        for (mut idx, v) in entries {
            if idx.iter().any(|&x| x >= dim) {
                return Err(Error::Shape(format!("tensor index {idx:?} outside dim {dim}")));
            }
            if !v.is_finite() || v < T::zero() {
                return Err(Error::Invalid(format!("tensor value {v} must be finite and >= 0")));
            }
            idx.sort_unstable();
            canon.push((idx, v));
        }
        canon.sort_unstable_by_key(|e| e.0);
        if let Some(w) = canon.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Invalid(format!("duplicate tensor entry {:?}", w[0].0)));
        }
        Ok(Self { dim, entries: canon })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of canonical (stored) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn canonical(&self) -> &[([usize; 3], T)] {
        &self.entries
    }

    pub fn get(&self, idx: [usize; 3]) -> T {
        let mut key = idx;
        key.sort_unstable();
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(p) => self.entries[p].1,
            Err(_) => T::zero(),
        }
    }

    /// Every distinct index permutation of every stored entry.
    pub fn expanded(&self) -> impl Iterator<Item = ([usize; 3], T)> + '_ {
        self.entries.iter().flat_map(|&(idx, v)| {
            distinct_permutations(idx).into_iter().map(move |p| (p, v))
        })
    }

    /// `H x_1 x x_2 x x_3 x`, summing over the full (implicitly symmetric)
    /// tensor.
    pub fn contract3(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector length {} for tensor dim {}",
                x.len(),
                self.dim
            )));
        }
        Ok(self
            .entries
            .iter()
            .map(|&([i, j, k], v)| T::of_usize(multiplicity([i, j, k])) * v * x[i] * x[j] * x[k])
            .sum())
    }
}

/// Number of distinct orderings of a sorted index triple.
pub fn multiplicity(idx: [usize; 3]) -> usize {
    distinct_permutations(idx).len()
}

fn distinct_permutations([a, b, c]: [usize; 3]) -> Vec<[usize; 3]> {
    let mut all = vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ];
    all.sort_unstable();
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_storage_is_symmetric() {
        let t = SparseTensor3::from_entries(4, vec![([3, 1, 2], 0.5), ([0, 0, 1], 0.25)]).unwrap();
        assert_eq!(t.get([2, 3, 1]), 0.5);
        assert_eq!(t.get([1, 0, 0]), 0.25);
        assert_eq!(t.get([0, 1, 2]), 0.0);
        assert_eq!(t.expanded().count(), 6 + 3);
    }

    #[test]
    fn rejects_permuted_duplicate() {
        assert!(SparseTensor3::from_entries(3, vec![([0, 1, 2], 1.0), ([2, 1, 0], 1.0)]).is_err());
        assert!(SparseTensor3::from_entries(3, vec![([0, 1, 3], 1.0)]).is_err());
        assert!(SparseTensor3::from_entries(3, vec![([0, 1, 2], -1.0)]).is_err());
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity([1, 1, 1]), 1);
        assert_eq!(multiplicity([1, 1, 2]), 3);
        assert_eq!(multiplicity([0, 1, 2]), 6);
    }
}
