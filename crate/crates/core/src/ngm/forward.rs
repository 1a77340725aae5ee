use std::sync::Arc;

use crate::affinity::AssociationGraph;
use crate::autodiff::{linear, sinkhorn_unrolled, EdgeList, Tape, Var};
use crate::error::{Error, Result};
use crate::ngm::params::{Linear, Mlp};
use crate::ngm::{NetConfig, NetParams};
use crate::numerics::{DenseMatrix, SparseMatrix, SparseTensor3};
use crate::scalar::Scalar;

/// Association graph data in the form consumed by the networks. Built once
/// per instance and reused across training steps.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub n1: usize,
    pub n2: usize,
    /// Initial vertex features, `n1 n2 x 1`.
    pub v0: DenseMatrix<T>,
    /// `A' ⊙ W`.
    pub propagation: Arc<SparseMatrix<T>>,
    /// Support of `W` with `A'` as fixed weights (edge-embedding path).
    pub edges: Arc<EdgeList<T>>,
    /// Initial single-channel edge features in `edges` order.
    pub w0: DenseMatrix<T>,
    /// Ordered third-order entries `((i, j, k), A3'_ijk H_ijk)`.
    pub hyper: Option<Arc<Vec<([usize; 3], T)>>>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(assoc: &AssociationGraph<T>) -> Result<Self> {
        if assoc.n1 > assoc.n2 {
            return Err(Error::Shape(format!(
                "networks expect n1 <= n2, got {}x{}",
                assoc.n1, assoc.n2
            )));
        }
        let n = assoc.num_vertices();
        Ok(Self {
            n1: assoc.n1,
            n2: assoc.n2,
            v0: DenseMatrix::from_vec(n, 1, assoc.v0.clone())?,
            propagation: Arc::new(assoc.propagation()),
            edges: Arc::new(EdgeList::from_sparse(&assoc.a_norm)),
            w0: DenseMatrix::from_vec(assoc.w.nnz(), 1, assoc.w.values().to_vec())?,
            hyper: None,
        })
    }

    /// Attaches a third-order tensor, normalizing each entry by the number
    /// of hyperedges incident to its first vertex.
    pub fn with_hyper(mut self, h: &SparseTensor3<T>) -> Result<Self> {
        let n = self.n1 * self.n2;
        if h.dim() != n {
            return Err(Error::Shape(format!("tensor over {} vertices, association graph has {n}", h.dim())));
        }
        let entries: Vec<([usize; 3], T)> = h.expanded().filter(|&(_, v)| v > T::zero()).collect();
        let mut marginal = vec![0usize; n];
        for (idx, _) in &entries {
            marginal[idx[0]] += 1;
        }
        let normalized = entries
            .into_iter()
            .map(|(idx, v)| (idx, v / T::of_usize(marginal[idx[0]])))
            .collect();
        self.hyper = Some(Arc::new(normalized));
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn cast<U: Scalar>(&self) -> Problem<U> {
        Problem {
            n1: self.n1,
            n2: self.n2,
            v0: self.v0.cast(),
            propagation: Arc::new(self.propagation.cast()),
            edges: Arc::new(self.edges.cast()),
            w0: self.w0.cast(),
            hyper: self
                .hyper
                .as_ref()
                .map(|h| Arc::new(h.iter().map(|&(i, v)| (i, U::lit(v.as_f64()))).collect())),
        }
    }
}

/// Result of a forward pass: the tape holding every intermediate plus
/// handles to the parameters (in store order) and the output.
#[derive(Debug, Clone)]
pub struct Forward<T> {
    pub tape: Tape<T>,
    pub params: Vec<Var>,
    pub output: Var,
    pub trace: LayerTrace,
}

/// Per-layer intermediate handles.
#[derive(Debug, Clone, Default)]
pub struct LayerTrace {
    pub messages: Vec<Var>,
    pub embeddings: Vec<Var>,
    pub edge_features: Vec<Var>,
}

impl<T: Scalar> Forward<T> {
    /// Doubly-stochastic `n1 x n2` prediction.
    pub fn soft(&self) -> &DenseMatrix<T> {
        self.tape.value(self.output)
    }

    /// Parameter gradients (store order) after `tape.backward`.
    pub fn param_grads(&self) -> Vec<DenseMatrix<T>> {
        self.params.iter().map(|&v| self.tape.grad_or_zero(v)).collect()
    }
}

/// Pushes every parameter onto `tape` as a leaf.
pub fn load_params<T: Scalar>(tape: &mut Tape<T>, params: &NetParams<T>) -> Vec<Var> {
    params.values().iter().map(|m| tape.leaf(m.clone())).collect()
}

/// Runs the configured variant (NGM, NGM-V, NGM+ or NHGM).
pub fn forward<T: Scalar>(problem: &Problem<T>, params: &NetParams<T>, cfg: &NetConfig) -> Result<Forward<T>> {
    cfg.validate()?;
    params.check_matches(cfg)?;
    let mut tape = Tape::new();
    let pv = load_params(&mut tape, params);
    let (output, trace) = forward_on(&mut tape, &pv, problem, params, cfg)?;
    Ok(Forward {
        tape,
        params: pv,
        output,
        trace,
    })
}

pub fn forward_ngm<T: Scalar>(problem: &Problem<T>, params: &NetParams<T>, cfg: &NetConfig) -> Result<Forward<T>> {
    if cfg.edge_embedding || cfg.hyper {
        return Err(Error::Config("forward_ngm needs edge_embedding and hyper off".into()));
    }
    forward(problem, params, cfg)
}

pub fn forward_ngm_plus<T: Scalar>(problem: &Problem<T>, params: &NetParams<T>, cfg: &NetConfig) -> Result<Forward<T>> {
    if !cfg.edge_embedding {
        return Err(Error::Config("forward_ngm_plus needs edge_embedding on".into()));
    }
    forward(problem, params, cfg)
}

pub fn forward_nhgm<T: Scalar>(
    problem: &Problem<T>,
    h: &SparseTensor3<T>,
    params: &NetParams<T>,
    cfg: &NetConfig,
) -> Result<Forward<T>> {
    if !cfg.hyper {
        return Err(Error::Config("forward_nhgm needs hyper on".into()));
    }
    let p = problem.clone().with_hyper(h)?;
    forward(&p, params, cfg)
}

fn affine_map<T: Scalar>(tape: &mut Tape<T>, pv: &[Var], l: Linear, x: Var) -> Result<Var> {
    linear(tape, x, pv[l.weight], pv[l.bias])
}

fn mlp<T: Scalar>(tape: &mut Tape<T>, pv: &[Var], m: Mlp, x: Var) -> Result<Var> {
    let h = affine_map(tape, pv, m.fc1, x)?;
    let h = tape.relu(h);
    let o = affine_map(tape, pv, m.fc2, h)?;
    Ok(tape.relu(o))
}

/// `sinkhorn(exp(alpha * (scores - max)))` on an `n1 n2 x 1` score column,
/// returned as an `n1 x n2` node. The max shift leaves square inputs
/// unchanged and keeps `exp` in range.
pub fn sinkhorn_head<T: Scalar>(tape: &mut Tape<T>, scores: Var, n1: usize, n2: usize, cfg: &NetConfig) -> Result<Var> {
    let s = tape.unvec(scores, n1, n2)?;
    exp_sinkhorn(tape, s, cfg.alpha, cfg)
}

/// Lower bound on `exp` outputs entering Sinkhorn, so a row far below the
/// global max does not underflow to zero.
pub const EXP_FLOOR: f64 = 1e-30;

pub(crate) fn exp_sinkhorn<T: Scalar>(tape: &mut Tape<T>, s: Var, alpha: f64, cfg: &NetConfig) -> Result<Var> {
    let s = tape.scale(s, T::lit(alpha));
    let s = tape.shift_max(s)?;
    let s = tape.exp(s)?;
    let s = tape.clamp(s, T::lit(EXP_FLOOR), T::one());
    sinkhorn_unrolled(tape, s, cfg.sinkhorn_iters_in_net, T::lit(cfg.sinkhorn_eps))
}

/// Forward pass on an existing tape with preloaded parameter handles.
pub fn forward_on<T: Scalar>(
    tape: &mut Tape<T>,
    pv: &[Var],
    problem: &Problem<T>,
    params: &NetParams<T>,
    cfg: &NetConfig,
) -> Result<(Var, LayerTrace)> {
    if cfg.hyper && problem.hyper.is_none() {
        return Err(Error::Config("hypergraph aggregation needs a third-order tensor".into()));
    }
    let (n1, n2) = (problem.n1, problem.n2);
    let mut trace = LayerTrace::default();
    let mut v = tape.leaf(problem.v0.clone());
    let mut w_edge = tape.leaf(problem.w0.clone());
    for layer in &params.layers {
        let fm = mlp(tape, pv, layer.f_m, v)?;
        let msg2 = match layer.f_e {
            Some(fe) => {
                let nbr = tape.gather_rows(v, &problem.edges.src)?;
                let input = tape.concat_cols(w_edge, nbr)?;
                w_edge = mlp(tape, pv, fe, input)?;
                trace.edge_features.push(w_edge);
                tape.edge_spmm(problem.edges.clone(), w_edge, fm)?
            }
            None => tape.spmm(problem.propagation.clone(), fm)?,
        };
        let fv = mlp(tape, pv, layer.f_v, v)?;
        let agg = match (layer.f_m3, &problem.hyper) {
            (Some(f3), Some(h)) if cfg.hyper => {
                let p = mlp(tape, pv, f3, v)?;
                let msg3 = tape.hyper_contract(h.clone(), p)?;
                let a = tape.scale(msg2, T::lit(cfg.lambda2));
                let b = tape.scale(msg3, T::lit(cfg.lambda3));
                tape.add(a, b)?
            }
            _ => msg2,
        };
        let m = tape.add(agg, fv)?;
        trace.messages.push(m);
        v = match layer.classifier {
            Some(cl) => {
                let scores = affine_map(tape, pv, cl, m)?;
                let s = sinkhorn_head(tape, scores, n1, n2, cfg)?;
                let col = tape.vec(s)?;
                tape.concat_cols(m, col)?
            }
            None => m,
        };
        trace.embeddings.push(v);
    }
    let scores = affine_map(tape, pv, params.f_c, v)?;
    let out = sinkhorn_head(tape, scores, n1, n2, cfg)?;
    if !tape.value(out).all_finite() {
        return Err(Error::NonFinite("network output"));
    }
    Ok((out, trace))
}
