//! Gaussian edge-length and angle-based affinities.

use crate::affinity::geometry::{triangle_sines, Graph};
use crate::affinity::qap::{QapInstance, Sense};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseMatrix, SparseTensor3};
use crate::scalar::Scalar;

/// Edge-length kernel bandwidth used by the synthetic benchmark.
pub const DEFAULT_SIGMA2: f64 = 5e-7;
/// Angle kernel bandwidth for third-order affinities.
pub const DEFAULT_SIGMA3: f64 = 0.1;

/// Index of correspondence `(i, a)` in the column-stacked vertex order.
#[inline]
pub fn corr_index(i: usize, a: usize, n1: usize) -> usize {
    i + n1 * a
}

/// Second-order affinity `K_{ia,jb} = exp(-(f_ij - f_ab)^2 / sigma2)` for
/// every edge `(i,j)` of `g1` and `(a,b)` of `g2`, in both orientations.
/// The diagonal holds `node_aff[i][a]` when given. Entries whose kernel
/// value underflows to zero are not stored.
pub fn build_affinity_matrix<T: Scalar>(
    g1: &Graph,
    g2: &Graph,
    sigma2: f64,
    node_aff: Option<&DenseMatrix<T>>,
) -> Result<QapInstance<T>> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Invalid(format!("sigma2 = {sigma2} must be positive")));
    }
    let (n1, n2) = (g1.num_nodes(), g2.num_nodes());
    if let Some(na) = node_aff {
        if na.shape() != (n1, n2) {
            return Err(Error::Shape(format!(
                "node affinity is {}x{}, expected {n1}x{n2}",
                na.rows(),
                na.cols()
            )));
        }
    }
    let mut entries = Vec::new();
    for (&(i, j), &fij) in g1.edges().iter().zip(g1.edge_feature()) {
        for (&(a, b), &fab) in g2.edges().iter().zip(g2.edge_feature()) {
            let d = fij - fab;
            let v = (-(d * d) / sigma2).exp();
            if v == 0.0 {
                continue;
            }
            let v = T::lit(v);
            // (i->a, j->b) and (i->b, j->a), each with its mirror.
            for (x, y) in [(a, b), (b, a)] {
                let p = corr_index(i, x, n1);
                let q = corr_index(j, y, n1);
                entries.push((p, q, v));
                entries.push((q, p, v));
            }
        }
    }
    if let Some(na) = node_aff {
        for i in 0..n1 {
            for a in 0..n2 {
                let v = na[(i, a)];
                if v != T::zero() {
                    let p = corr_index(i, a, n1);
                    entries.push((p, p, v));
                }
            }
        }
    }
    let k = SparseMatrix::from_triplets(n1 * n2, n1 * n2, entries)?;
    QapInstance::lawler(k, n1, n2, Sense::Maximize)
}

/// Third-order affinity over correspondence triples:
/// `H = exp(-(Σ_q |sin θ¹_q - sin θ²_q|) / sigma3^2)`.
///
/// Hyperedges of `g1` are its stored triangles (all triples if none);
/// every ordered node triple of `g2` is tried against each of them.
pub fn build_affinity_tensor<T: Scalar>(g1: &Graph, g2: &Graph, sigma3: f64) -> Result<SparseTensor3<T>> {
    if !(sigma3 > 0.0) || !sigma3.is_finite() {
        return Err(Error::Invalid(format!("sigma3 = {sigma3} must be positive")));
    }
    let (n1, n2) = (g1.num_nodes(), g2.num_nodes());
    let hyper1 = g1.hyperedges();
    if hyper1.is_empty() {
        return Err(Error::Invalid("first graph has no hyperedges".into()));
    }
    let mut degenerate = 0usize;
    let mut sines = |g: &Graph, t: [usize; 3]| {
        let (s, bad) = triangle_sines(t.map(|v| g.points().get(v)));
        degenerate += usize::from(bad);
        s
    };
    let s1: Vec<[f64; 3]> = hyper1.iter().map(|&t| sines(g1, t)).collect();
    let mut s2 = Vec::new();
    for a in 0..n2 {
        for b in 0..n2 {
            for c in 0..n2 {
                if a != b && b != c && a != c {
                    s2.push(([a, b, c], sines(g2, [a, b, c])));
                }
            }
        }
    }
    if degenerate > 0 {
        log::warn!("affinity tensor: {degenerate} degenerate triangles had undefined angles");
    }

    let denom = sigma3 * sigma3;
    let mut entries = Vec::with_capacity(hyper1.len() * s2.len());
    for (t1, a1) in hyper1.iter().zip(&s1) {
        for (t2, a2) in &s2 {
            let dist: f64 = (0..3).map(|q| (a1[q] - a2[q]).abs()).sum();
            let v = (-dist / denom).exp();
            if v == 0.0 {
                continue;
            }
            let idx = [0, 1, 2].map(|q| corr_index(t1[q], t2[q], n1));
            entries.push((idx, T::lit(v)));
        }
    }
    SparseTensor3::from_entries(n1 * n2, entries)
}
