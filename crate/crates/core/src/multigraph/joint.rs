use std::collections::BTreeMap;
use std::sync::Arc;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::ngm::{exp_sinkhorn, NetConfig};
use crate::numerics::{min_consecutive_gap, sym_eig, DenseMatrix, JacobiConfig};
use crate::scalar::Scalar;

/// `m x m` grid of `n x n` soft matchings with `S_ii = I` and
/// `S_ji = S_ijᵀ`. Block `(i, j)` maps nodes of graph `i` (rows) to nodes of
/// graph `j` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct JointMatching<T> {
    pub m: usize,
    pub n: usize,
    blocks: Vec<DenseMatrix<T>>,
}

/// Pairs `(i, j)` with `i < j` in lexicographic order.
pub fn pair_list(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect()
}

pub fn build_joint<T: Scalar>(pairwise: &BTreeMap<(usize, usize), DenseMatrix<T>>, m: usize, n: usize) -> Result<JointMatching<T>> {
    if m == 0 || n == 0 {
        return Err(Error::Empty("joint matching"));
    }
    if let Some(&(i, j)) = pairwise.keys().find(|&&(i, j)| i >= j || j >= m) {
        return Err(Error::Invalid(format!("pair ({i}, {j}) is not i < j < {m}")));
    }
    let mut blocks = vec![DenseMatrix::zeros(n, n); m * m];
    for i in 0..m {
        blocks[i * m + i] = DenseMatrix::identity(n);
    }
    for (i, j) in pair_list(m) {
        let s = pairwise.get(&(i, j)).ok_or_else(|| Error::Invalid(format!("missing pairwise matching ({i}, {j})")))?;
        if s.shape() != (n, n) {
            return Err(Error::Shape(format!("block ({i}, {j}) is {}x{}, expected {n}x{n}", s.rows(), s.cols())));
        }
        blocks[j * m + i] = s.transpose();
        blocks[i * m + j] = s.clone();
    }
    Ok(JointMatching { m, n, blocks })
}

impl<T: Scalar> JointMatching<T> {
    pub fn block(&self, i: usize, j: usize) -> &DenseMatrix<T> {
        &self.blocks[i * self.m + j]
    }

    /// The `mn x mn` matrix; row `i n + p` is node `p` of graph `i`.
    pub fn assembled(&self) -> DenseMatrix<T> {
        let n = self.n;
        DenseMatrix::from_fn(self.m * n, self.m * n, |r, c| self.block(r / n, c / n)[(r % n, c % n)])
    }
}

/// When synchronization falls back to the unsynchronized blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackRule {
    /// Smallest gap between consecutive top-`n` eigenvalues below `delta`.
    TopGap,
    /// Gap between the `n`-th and `(n+1)`-th eigenvalues below `delta`.
    /// This is the only gap the projector gradient divides by.
    SpectralGap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    pub delta: f64,
    pub alpha_hat: f64,
    pub rule: FallbackRule,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            alpha_hat: 20.0,
            rule: FallbackRule::SpectralGap,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !(self.alpha_hat > 0.0) {
            return Err(Error::Config(format!("delta = {}, alpha_hat = {}", self.delta, self.alpha_hat)));
        }
        Ok(())
    }
}

/// Spectrum summary of one synchronization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncInfo {
    /// Smallest gap between consecutive top-`n` eigenvalues.
    pub top_gap: f64,
    /// `lambda_n - lambda_{n+1}` (infinite when `m = 1`).
    pub spectral_gap: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutcome<T> {
    pub m: usize,
    pub n: usize,
    /// Grid of synchronized matchings, identity on the diagonal.
    pub blocks: Vec<DenseMatrix<T>>,
    pub info: SyncInfo,
}

impl<T> SyncOutcome<T> {
    pub fn block(&self, i: usize, j: usize) -> &DenseMatrix<T> {
        &self.blocks[i * self.m + j]
    }
}

/// Synchronizes pairwise nodes `pairs[k]` (order of [`pair_list`]) on the
/// tape and returns the Sinkhorn outputs in the same order.
pub fn synchronize_on<T: Scalar>(
    tape: &mut Tape<T>,
    pairs: &[Var],
    m: usize,
    n: usize,
    sync: &SyncConfig,
    net: &NetConfig,
) -> Result<(Vec<Var>, SyncInfo)> {
    sync.validate()?;
    let list = pair_list(m);
    if pairs.len() != list.len() {
        return Err(Error::Invalid(format!("{} pairwise matchings for {m} graphs", pairs.len())));
    }
    for &p in pairs {
        if tape.shape(p) != (n, n) {
            let (r, c) = tape.shape(p);
            return Err(Error::Shape(format!("pairwise block {r}x{c}, expected {n}x{n}")));
        }
    }
    if m == 1 {
        let info = SyncInfo {
            top_gap: min_consecutive_gap(&vec![1.0; n]),
            spectral_gap: f64::INFINITY,
            fallback: false,
        };
        return Ok((Vec::new(), info));
    }

    // Source layout: [I | S_01 | S_02 | ...], each n wide.
    let mut src = tape.leaf(DenseMatrix::identity(n));
    for &p in pairs {
        src = tape.concat_cols(src, p)?;
    }
    let width = n * (pairs.len() + 1);
    let slot: BTreeMap<(usize, usize), usize> = list.iter().enumerate().map(|(k, &ij)| (ij, k + 1)).collect();
    let mn = m * n;
    let map: Vec<Option<usize>> = (0..mn * mn)
        .map(|flat| {
            let (r, c) = (flat / mn, flat % mn);
            let (gi, p, gj, q) = (r / n, r % n, c / n, c % n);
            Some(match gi.cmp(&gj) {
                std::cmp::Ordering::Equal => p * width + q,
                std::cmp::Ordering::Less => p * width + slot[&(gi, gj)] * n + q,
                std::cmp::Ordering::Greater => q * width + slot[&(gj, gi)] * n + p,
            })
        })
        .collect();
    let joint = tape.gather(src, mn, mn, Arc::new(map), T::zero())?;

    let eig = sym_eig(tape.value(joint), &JacobiConfig::default())?;
    let values: Vec<f64> = eig.values.iter().map(|v| v.as_f64()).collect();
    let top_gap = min_consecutive_gap(&values[..n]);
    let spectral_gap = values[n - 1] - values[n];
    let fallback = match sync.rule {
        FallbackRule::TopGap => top_gap < sync.delta,
        FallbackRule::SpectralGap => spectral_gap < sync.delta,
    };

    let reconstructed = if fallback {
        None
    } else {
        let proj = tape.eig_project(joint, n)?;
        Some(tape.scale(proj, T::of_usize(m)))
    };
    let mut out = Vec::with_capacity(pairs.len());
    for (k, &(i, j)) in list.iter().enumerate() {
        let block = match reconstructed {
            None => pairs[k],
            Some(s_hat) => {
                let map = (0..n * n).map(|f| Some((i * n + f / n) * mn + j * n + f % n)).collect();
                tape.gather(s_hat, n, n, Arc::new(map), T::zero())?
            }
        };
        out.push(exp_sinkhorn(tape, block, sync.alpha_hat, net)?);
    }
    Ok((
        out,
        SyncInfo {
            top_gap,
            spectral_gap,
            fallback,
        },
    ))
}

/// Permutation synchronization of a joint matching followed by
/// `Sinkhorn(exp(alpha_hat * S_ij))` on every off-diagonal block.
pub fn synchronize<T: Scalar>(j: &JointMatching<T>, sync: &SyncConfig) -> Result<SyncOutcome<T>> {
    let asym = j.assembled().asymmetry().unwrap_or(T::zero()).as_f64();
    if asym > 1e-9 {
        return Err(Error::NotSymmetric(asym));
    }
    let mut tape = Tape::new();
    let list = pair_list(j.m);
    let pairs: Vec<Var> = list.iter().map(|&(a, b)| tape.leaf(j.block(a, b).clone())).collect();
    let (out, info) = synchronize_on(&mut tape, &pairs, j.m, j.n, sync, &NetConfig::default())?;
    let mut blocks = vec![DenseMatrix::zeros(j.n, j.n); j.m * j.m];
    for i in 0..j.m {
        blocks[i * j.m + i] = DenseMatrix::identity(j.n);
    }
    for (&(a, b), &v) in list.iter().zip(&out) {
        let s = tape.value(v).clone();
        blocks[b * j.m + a] = s.transpose();
        blocks[a * j.m + b] = s;
    }
    Ok(SyncOutcome {
        m: j.m,
        n: j.n,
        blocks,
        info,
    })
}
