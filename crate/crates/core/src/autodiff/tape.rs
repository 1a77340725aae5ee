use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{sym_eig, DenseMatrix, JacobiConfig, SparseMatrix};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sparse edge list for per-channel message passing: edge `e` sends from
/// vertex `src[e]` to vertex `dst[e]` with fixed weight `weight[e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList<T> {
    pub vertices: usize,
    pub dst: Vec<usize>,
    pub src: Vec<usize>,
    pub weight: Vec<T>,
}

impl<T: Scalar> EdgeList<T> {
    /// Edges in CSR order of `m`: row index is the destination.
    pub fn from_sparse(m: &SparseMatrix<T>) -> Self {
        let (mut dst, mut src, mut weight) = (Vec::new(), Vec::new(), Vec::new());
        for (r, c, v) in m.triplets() {
            dst.push(r);
            src.push(c);
            weight.push(v);
        }
        Self {
            vertices: m.rows(),
            dst,
            src,
            weight,
        }
    }

    pub fn len(&self) -> usize {
        self.dst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dst.is_empty()
    }

    pub fn cast<U: Scalar>(&self) -> EdgeList<U> {
        EdgeList {
            vertices: self.vertices,
            dst: self.dst.clone(),
            src: self.src.clone(),
            weight: self.weight.iter().map(|&v| U::lit(v.as_f64())).collect(),
        }
    }
}

#[derive(Debug, Clone)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    AddRowBias(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Affine(Var, T),
    Relu(Var),
    Exp(Var),
    Log(Var),
    Clamp(Var, T, T),
    ShiftMax(Var, usize),
    SpMM(Arc<SparseMatrix<T>>, Var),
    EdgeSpMM(Arc<EdgeList<T>>, Var, Var),
    Gather(Var, Arc<Vec<Option<usize>>>),
    ConcatCols(Var, Var),
    RowNormalize(Var),
    ColNormalize(Var),
    Sum(Var),
    HyperContract(Arc<Vec<([usize; 3], T)>>, Var),
    EigProject { src: Var, values: Vec<T>, vectors: DenseMatrix<T>, k: usize },
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: DenseMatrix<T>,
    op: Op<T>,
}

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so a single reverse sweep is a valid topological order.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<DenseMatrix<T>>>,
}

pub type GradientTape<T> = Tape<T>;

fn shape_err(what: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Input node: a parameter or a constant. Gradients are accumulated for
    /// every leaf.
    pub fn leaf(&mut self, value: DenseMatrix<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = self.value(a).matmul(self.value(b))?;
        Ok(self.push(y, Op::MatMul(a, b)))
    }

    /// `a + 1 bᵀ` for a `1 x c` row `b`.
    pub fn add_row_bias(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(shape_err("row bias", av.shape(), bv.shape()));
        }
        let mut y = av.clone();
        let c = av.cols();
        for (k, v) in y.data_mut().iter_mut().enumerate() {
            *v += bv.data()[k % c];
        }
        Ok(self.push(y, Op::AddRowBias(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = self.value(a).add(self.value(b))?;
        Ok(self.push(y, Op::Add(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err("hadamard product", av.shape(), bv.shape()));
        }
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| x * y).collect();
        let y = DenseMatrix::from_vec(av.rows(), av.cols(), data)?;
        Ok(self.push(y, Op::Mul(a, b)))
    }

    /// `scale * a + shift`.
    pub fn affine(&mut self, a: Var, scale: T, shift: T) -> Var {
        let y = self.value(a).map(|x| scale * x + shift);
        self.push(y, Op::Affine(a, scale))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        self.affine(a, c, T::zero())
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let y = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        self.push(y, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let y = self.value(a).map(T::exp);
        if !y.all_finite() {
            return Err(Error::NonFinite("exp activation"));
        }
        Ok(self.push(y, Op::Exp(a)))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        if self.value(a).data().iter().any(|&x| x <= T::zero()) {
            return Err(Error::Invalid("log of a non-positive entry".into()));
        }
        let y = self.value(a).map(T::ln);
        Ok(self.push(y, Op::Log(a)))
    }

    /// Clip into `[lo, hi]`; no gradient flows through clipped entries.
    pub fn clamp(&mut self, a: Var, lo: T, hi: T) -> Var {
        let y = self.value(a).map(|x| x.max(lo).min(hi));
        self.push(y, Op::Clamp(a, lo, hi))
    }

    /// `a - max(a)`, differentiable through the (first) arg-max entry.
    pub fn shift_max(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.is_empty() {
            return Err(Error::Empty("shift_max input"));
        }
        let mut arg = 0;
        for (k, &x) in av.data().iter().enumerate() {
            if x > av.data()[arg] {
                arg = k;
            }
        }
        let top = av.data()[arg];
        let y = av.map(|x| x - top);
        Ok(self.push(y, Op::ShiftMax(a, arg)))
    }

    /// Fixed sparse matrix times a variable dense matrix.
    pub fn spmm(&mut self, m: Arc<SparseMatrix<T>>, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if m.cols() != xv.rows() {
            return Err(shape_err("sparse product", (m.rows(), m.cols()), xv.shape()));
        }
        let c = xv.cols();
        let mut y = DenseMatrix::zeros(m.rows(), c);
        for r in 0..m.rows() {
            for (col, w) in m.row(r) {
                let src = xv.row(col);
                for (out, &s) in y.row_mut(r).iter_mut().zip(src) {
                    *out += w * s;
                }
            }
        }
        Ok(self.push(y, Op::SpMM(m, x)))
    }

    /// Per-channel aggregation with variable edge features:
    /// `y[dst_e, c] += weight_e * w[e, c] * p[src_e, c]`.
    pub fn edge_spmm(&mut self, edges: Arc<EdgeList<T>>, w: Var, p: Var) -> Result<Var> {
        let (wv, pv) = (self.value(w), self.value(p));
        if wv.rows() != edges.len() || pv.rows() != edges.vertices || wv.cols() != pv.cols() {
            return Err(shape_err("edge aggregation", wv.shape(), pv.shape()));
        }
        let c = pv.cols();
        let mut y = DenseMatrix::zeros(edges.vertices, c);
        for e in 0..edges.len() {
            let a = edges.weight[e];
            let (we, ps) = (wv.row(e), pv.row(edges.src[e]));
            let out = y.row_mut(edges.dst[e]);
            for ch in 0..c {
                out[ch] += a * we[ch] * ps[ch];
            }
        }
        Ok(self.push(y, Op::EdgeSpMM(edges, w, p)))
    }

    /// Builds a `rows x cols` matrix whose flat (row-major) entry `k` is
    /// `src.data[map[k]]`, or `fill` where `map[k]` is `None`.
    pub fn gather(&mut self, src: Var, rows: usize, cols: usize, map: Arc<Vec<Option<usize>>>, fill: T) -> Result<Var> {
        let sv = self.value(src);
        if map.len() != rows * cols {
            return Err(Error::Shape(format!("gather map of length {} for {rows}x{cols}", map.len())));
        }
        if map.iter().flatten().any(|&k| k >= sv.data().len()) {
            return Err(Error::Shape("gather index out of range".into()));
        }
        let data = map.iter().map(|m| m.map_or(fill, |k| sv.data()[k])).collect();
        let y = DenseMatrix::from_vec(rows, cols, data)?;
        Ok(self.push(y, Op::Gather(src, map)))
    }

    /// Rows of `src` selected by `idx`.
    pub fn gather_rows(&mut self, src: Var, idx: &[usize]) -> Result<Var> {
        let c = self.value(src).cols();
        let map: Vec<Option<usize>> = idx.iter().flat_map(|&r| (0..c).map(move |j| Some(r * c + j))).collect();
        self.gather(src, idx.len(), c, Arc::new(map), T::zero())
    }

    pub fn transpose(&mut self, src: Var) -> Result<Var> {
        let (r, c) = self.shape(src);
        let map = (0..c).flat_map(|j| (0..r).map(move |i| Some(i * c + j))).collect();
        self.gather(src, c, r, Arc::new(map), T::zero())
    }

    /// Column-stacked `N x 1` vector (N = rows*cols) reshaped to `rows x cols`.
    pub fn unvec(&mut self, src: Var, rows: usize, cols: usize) -> Result<Var> {
        let map = (0..rows).flat_map(|i| (0..cols).map(move |a| Some(i + rows * a))).collect();
        self.gather(src, rows, cols, Arc::new(map), T::zero())
    }

    /// `rows x cols` matrix flattened to a column-stacked `N x 1` vector.
    pub fn vec(&mut self, src: Var) -> Result<Var> {
        let (r, c) = self.shape(src);
        let map = (0..c).flat_map(|a| (0..r).map(move |i| Some(i * c + a))).collect();
        self.gather(src, r * c, 1, Arc::new(map), T::zero())
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != bv.rows() {
            return Err(shape_err("column concatenation", av.shape(), bv.shape()));
        }
        let (ca, cb) = (av.cols(), bv.cols());
        let y = DenseMatrix::from_fn(av.rows(), ca + cb, |i, j| if j < ca { av[(i, j)] } else { bv[(i, j - ca)] });
        Ok(self.push(y, Op::ConcatCols(a, b)))
    }

    pub fn row_normalize(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let sums = av.row_sums();
        if sums.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::Degenerate("row normalization of a zero row".into()));
        }
        let y = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| av[(i, j)] / sums[i]);
        Ok(self.push(y, Op::RowNormalize(a)))
    }

    pub fn col_normalize(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let sums = av.col_sums();
        if sums.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::Degenerate("column normalization of a zero column".into()));
        }
        let y = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| av[(i, j)] / sums[j]);
        Ok(self.push(y, Op::ColNormalize(a)))
    }

    /// Sum of all entries as a `1 x 1` node.
    pub fn sum(&mut self, a: Var) -> Var {
        let y = DenseMatrix::filled(1, 1, self.value(a).sum());
        self.push(y, Op::Sum(a))
    }

    /// Third-order message `y[i, c] = Σ w p[j, c] p[k, c]` over the given
    /// ordered entries `((i, j, k), w)`.
    pub fn hyper_contract(&mut self, entries: Arc<Vec<([usize; 3], T)>>, p: Var) -> Result<Var> {
        let pv = self.value(p);
        let n = pv.rows();
        if entries.iter().any(|(idx, _)| idx.iter().any(|&i| i >= n)) {
            return Err(Error::Shape("hyperedge index outside the vertex set".into()));
        }
        let c = pv.cols();
        let mut y = DenseMatrix::zeros(n, c);
        for &([i, j, k], w) in entries.iter() {
            let (pj, pk) = (pv.row(j), pv.row(k));
            let out = y.row_mut(i);
            for ch in 0..c {
                out[ch] += w * pj[ch] * pk[ch];
            }
        }
        Ok(self.push(y, Op::HyperContract(entries, p)))
    }

    /// Projector `U Uᵀ` onto the leading `k` eigenvectors of the symmetric
    /// part of `s`.
    pub fn eig_project(&mut self, s: Var, k: usize) -> Result<Var> {
        let sv = self.value(s);
        if k == 0 || k > sv.rows() {
            return Err(Error::Invalid(format!("top-{k} projector of a {}x{} matrix", sv.rows(), sv.cols())));
        }
        let n = sv.rows();
        let half = T::lit(0.5);
        let sym = DenseMatrix::from_fn(n, n, |i, j| half * (sv[(i, j)] + sv[(j, i)]));
        let full = sym_eig(&sym, &JacobiConfig::default())?;
        let u = &full.vectors;
        let y = DenseMatrix::from_fn(n, n, |i, j| (0..k).map(|t| u[(i, t)] * u[(j, t)]).sum());
        Ok(self.push(
            y,
            Op::EigProject {
                src: s,
                values: full.values,
                vectors: full.vectors,
                k,
            },
        ))
    }

    /// Reverse sweep from a `1 x 1` node. Previous gradients are discarded.
    pub fn backward(&mut self, out: Var) -> Result<()> {
        if self.value(out).shape() != (1, 1) {
            let (r, c) = self.shape(out);
            return Err(Error::Shape(format!("backward from a {r}x{c} node")));
        }
        self.grads = vec![None; self.nodes.len()];
        self.grads[out.0] = Some(DenseMatrix::filled(1, 1, T::one()));
        for idx in (0..=out.0).rev() {
            let Some(g) = self.grads[idx].take() else { continue };
            self.propagate(idx, &g)?;
            self.grads[idx] = Some(g);
        }
        Ok(())
    }

    /// Gradient of the last backward output with respect to `v`; `None`
    /// when `v` did not influence it.
    pub fn grad(&self, v: Var) -> Option<&DenseMatrix<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn grad_or_zero(&self, v: Var) -> DenseMatrix<T> {
        self.grad(v).cloned().unwrap_or_else(|| {
            let (r, c) = self.shape(v);
            DenseMatrix::zeros(r, c)
        })
    }

    fn accumulate(&mut self, v: Var, g: DenseMatrix<T>) {
        match &mut self.grads[v.0] {
            Some(acc) => acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, &b)| *a += b),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&mut self, idx: usize, g: &DenseMatrix<T>) -> Result<()> {
        let op = self.nodes[idx].op.clone();
        let y = &self.nodes[idx].value;
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let ga = g.matmul(&self.value(b).transpose())?;
                let gb = self.value(a).transpose().matmul(g)?;
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::AddRowBias(a, b) => {
                let gb = DenseMatrix::from_vec(1, g.cols(), g.col_sums())?;
                self.accumulate(a, g.clone());
                self.accumulate(b, gb);
            }
            Op::Add(a, b) => {
                self.accumulate(a, g.clone());
                self.accumulate(b, g.clone());
            }
            Op::Mul(a, b) => {
                let ga = zip_map(g, self.value(b), |g, x| g * x);
                let gb = zip_map(g, self.value(a), |g, x| g * x);
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::Affine(a, s) => self.accumulate(a, g.scale(s)),
            Op::Relu(a) => {
                let ga = zip_map(g, self.value(a), |g, x| if x > T::zero() { g } else { T::zero() });
                self.accumulate(a, ga);
            }
            Op::Exp(a) => {
                let ga = zip_map(g, y, |g, y| g * y);
                self.accumulate(a, ga);
            }
            Op::Log(a) => {
                let ga = zip_map(g, self.value(a), |g, x| g / x);
                self.accumulate(a, ga);
            }
            Op::Clamp(a, lo, hi) => {
                let ga = zip_map(g, self.value(a), |g, x| if x >= lo && x <= hi { g } else { T::zero() });
                self.accumulate(a, ga);
            }
            Op::ShiftMax(a, arg) => {
                let mut ga = g.clone();
                ga.data_mut()[arg] -= g.sum();
                self.accumulate(a, ga);
            }
            Op::SpMM(m, x) => {
                let xv = self.value(x);
                let c = xv.cols();
                let mut gx = DenseMatrix::zeros(xv.rows(), c);
                for r in 0..m.rows() {
                    let gr = g.row(r);
                    for (col, w) in m.row(r) {
                        for (out, &s) in gx.row_mut(col).iter_mut().zip(gr) {
                            *out += w * s;
                        }
                    }
                }
                self.accumulate(x, gx);
            }
            Op::EdgeSpMM(edges, w, p) => {
                let (wv, pv) = (self.value(w), self.value(p));
                let c = pv.cols();
                let mut gw = DenseMatrix::zeros(wv.rows(), c);
                let mut gp = DenseMatrix::zeros(pv.rows(), c);
                for e in 0..edges.len() {
                    let a = edges.weight[e];
                    let gd = g.row(edges.dst[e]);
                    for ch in 0..c {
                        gw[(e, ch)] = a * gd[ch] * pv[(edges.src[e], ch)];
                        gp[(edges.src[e], ch)] += a * gd[ch] * wv[(e, ch)];
                    }
                }
                self.accumulate(w, gw);
                self.accumulate(p, gp);
            }
            Op::Gather(src, map) => {
                let (r, c) = self.shape(src);
                let mut gs = DenseMatrix::zeros(r, c);
                for (k, m) in map.iter().enumerate() {
                    if let Some(s) = m {
                        gs.data_mut()[*s] += g.data()[k];
                    }
                }
                self.accumulate(src, gs);
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(a).cols();
                let cb = g.cols() - ca;
                let ga = DenseMatrix::from_fn(g.rows(), ca, |i, j| g[(i, j)]);
                let gb = DenseMatrix::from_fn(g.rows(), cb, |i, j| g[(i, j + ca)]);
                self.accumulate(a, ga);
                self.accumulate(b, gb);
            }
            Op::RowNormalize(a) => {
                let sums = self.value(a).row_sums();
                let dots: Vec<T> = (0..g.rows())
                    .map(|i| g.row(i).iter().zip(y.row(i)).map(|(&g, &y)| g * y).sum())
                    .collect();
                let ga = DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| (g[(i, j)] - dots[i]) / sums[i]);
                self.accumulate(a, ga);
            }
            Op::ColNormalize(a) => {
                let sums = self.value(a).col_sums();
                let mut dots = vec![T::zero(); g.cols()];
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        dots[j] += g[(i, j)] * y[(i, j)];
                    }
                }
                let ga = DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| (g[(i, j)] - dots[j]) / sums[j]);
                self.accumulate(a, ga);
            }
            Op::Sum(a) => {
                let (r, c) = self.shape(a);
                self.accumulate(a, DenseMatrix::filled(r, c, g.data()[0]));
            }
            Op::HyperContract(entries, p) => {
                let pv = self.value(p);
                let c = pv.cols();
                let mut gp = DenseMatrix::zeros(pv.rows(), c);
                for &([i, j, k], w) in entries.iter() {
                    for ch in 0..c {
                        let gi = w * g[(i, ch)];
                        gp[(j, ch)] += gi * pv[(k, ch)];
                        gp[(k, ch)] += gi * pv[(j, ch)];
                    }
                }
                self.accumulate(p, gp);
            }
            Op::EigProject { src, values, vectors, k } => {
                let gs = eig_project_backward(g, &values, &vectors, k)?;
                self.accumulate(src, gs);
            }
        }
        Ok(())
    }
}

fn zip_map<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, f: impl Fn(T, T) -> T) -> DenseMatrix<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    DenseMatrix::from_vec(a.rows(), a.cols(), data).unwrap_or_else(|_| DenseMatrix::zeros(a.rows(), a.cols()))
}

/// First-order perturbation of `P = Σ_{i<k} u_i u_iᵀ`. Pairs inside the
/// leading block cancel, leaving
/// `dL/dS = sym(Σ_{i<k<=j} u_jᵀ(G+Gᵀ)u_i / (λ_i-λ_j) · u_j u_iᵀ)`.
fn eig_project_backward<T: Scalar>(g: &DenseMatrix<T>, values: &[T], u: &DenseMatrix<T>, k: usize) -> Result<DenseMatrix<T>> {
    let n = u.rows();
    let gs = g.add(&g.transpose())?;
    let gu = gs.matmul(u)?;
    // coef[j][i] for rest j, top i
    let mut m = DenseMatrix::<T>::zeros(n, n);
    for j in k..n {
        for i in 0..k {
            let gap = values[i] - values[j];
            if gap == T::zero() {
                return Err(Error::Degenerate("eigengap at the projector boundary is zero".into()));
            }
            let proj: T = (0..n).map(|r| u[(r, j)] * gu[(r, i)]).sum();
            let coef = proj / gap;
            for r in 0..n {
                let ur = coef * u[(r, j)];
                for c in 0..n {
                    m[(r, c)] += ur * u[(c, i)];
                }
            }
        }
    }
    let half = T::lit(0.5);
    Ok(DenseMatrix::from_fn(n, n, |r, c| half * (m[(r, c)] + m[(c, r)])))
}
