//! QAP instances and objective evaluation.

use crate::error::{Error, Result};
use crate::numerics::{kron_capped, Assignment, DenseMatrix, SparseMatrix, SparseTensor3, DEFAULT_KRON_CAP};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QapForm<T> {
    /// `vec(X)ᵀ K vec(X)` with `K` of size `(n1 n2)^2`.
    Lawler { k: SparseMatrix<T>, n1: usize, n2: usize },
    /// `tr(Xᵀ F1 X F2) + tr(Kpᵀ X)`.
    KoopmansBeckmann {
        f1: DenseMatrix<T>,
        f2: DenseMatrix<T>,
        kp: Option<DenseMatrix<T>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QapInstance<T> {
    pub form: QapForm<T>,
    pub sense: Sense,
}

impl<T: Scalar> QapInstance<T> {
    pub fn lawler(k: SparseMatrix<T>, n1: usize, n2: usize, sense: Sense) -> Result<Self> {
        if k.rows() != n1 * n2 || k.cols() != n1 * n2 {
            return Err(Error::Shape(format!(
                "affinity matrix is {}x{}, expected {}x{}",
                k.rows(),
                k.cols(),
                n1 * n2,
                n1 * n2
            )));
        }
        Ok(Self {
            form: QapForm::Lawler { k, n1, n2 },
            sense,
        })
    }

    pub fn koopmans_beckmann(
        f1: DenseMatrix<T>,
        f2: DenseMatrix<T>,
        kp: Option<DenseMatrix<T>>,
        sense: Sense,
    ) -> Result<Self> {
        check_kb_shapes(&f1, &f2, kp.as_ref())?;
        Ok(Self {
            form: QapForm::KoopmansBeckmann { f1, f2, kp },
            sense,
        })
    }

    pub fn sizes(&self) -> (usize, usize) {
        match &self.form {
            QapForm::Lawler { n1, n2, .. } => (*n1, *n2),
            QapForm::KoopmansBeckmann { f1, f2, .. } => (f1.rows(), f2.rows()),
        }
    }

    /// The Lawler affinity matrix, converting Koopmans–Beckmann form on the
    /// fly.
    pub fn affinity(&self) -> Result<SparseMatrix<T>> {
        match &self.form {
            QapForm::Lawler { k, .. } => Ok(k.clone()),
            QapForm::KoopmansBeckmann { f1, f2, kp } => match kb_to_lawler(f1, f2, kp.as_ref())?.form {
                QapForm::Lawler { k, .. } => Ok(k),
                QapForm::KoopmansBeckmann { .. } => unreachable!(),
            },
        }
    }

    pub fn objective(&self, x: &Assignment) -> Result<T> {
        match &self.form {
            QapForm::Lawler { k, .. } => lawler_objective(k, x),
            QapForm::KoopmansBeckmann { f1, f2, kp } => kb_objective(f1, f2, kp.as_ref(), x),
        }
    }
}

fn check_kb_shapes<T: Scalar>(f1: &DenseMatrix<T>, f2: &DenseMatrix<T>, kp: Option<&DenseMatrix<T>>) -> Result<()> {
    if !f1.is_square() || !f2.is_square() {
        return Err(Error::Shape("adjacency matrices must be square".into()));
    }
    if let Some(kp) = kp {
        if kp.shape() != (f1.rows(), f2.rows()) {
            return Err(Error::Shape(format!(
                "node affinity is {}x{}, expected {}x{}",
                kp.rows(),
                kp.cols(),
                f1.rows(),
                f2.rows()
            )));
        }
    }
    Ok(())
}

/// `vec(X)ᵀ K vec(X)` with column-stacking `vec`.
pub fn lawler_objective<T: Scalar>(k: &SparseMatrix<T>, x: &Assignment) -> Result<T> {
    let n = x.rows() * x.cols();
    if k.rows() != n || k.cols() != n {
        return Err(Error::Shape(format!(
            "{}x{} affinity for a {}x{} assignment",
            k.rows(),
            k.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let n1 = x.rows();
    let selected: Vec<usize> = x.col_of_row().iter().enumerate().map(|(i, &a)| i + n1 * a).collect();
    let mut total = T::zero();
    for &p in &selected {
        for &q in &selected {
            total += k.get(p, q);
        }
    }
    Ok(total)
}

/// `tr(Xᵀ F1 X F2) + tr(Kpᵀ X)`. For a permutation `p` this is
/// `Σ_ij F1[i][j] F2[p(j)][p(i)] + Σ_i Kp[i][p(i)]`.
pub fn kb_objective<T: Scalar>(
    f1: &DenseMatrix<T>,
    f2: &DenseMatrix<T>,
    kp: Option<&DenseMatrix<T>>,
    x: &Assignment,
) -> Result<T> {
    check_kb_shapes(f1, f2, kp)?;
    if x.rows() != f1.rows() || x.cols() != f2.rows() {
        return Err(Error::Shape(format!(
            "{}x{} assignment for {}- and {}-node graphs",
            x.rows(),
            x.cols(),
            f1.rows(),
            f2.rows()
        )));
    }
    let xd = x.to_dense::<T>();
    let quad = xd.transpose().matmul(f1)?.matmul(&xd)?.matmul(f2)?.trace();
    let lin = kp.map_or(T::zero(), |kp| x.score(kp));
    Ok(quad + lin)
}

/// `H ⊗1 x ⊗2 x ⊗3 x` over the implicitly symmetric tensor.
pub fn hyper_objective<T: Scalar>(h: &SparseTensor3<T>, x: &Assignment) -> Result<T> {
    h.contract3(&x.vec::<T>())
}

/// Lawler form of a Koopmans–Beckmann instance.
///
/// `K = ½ (F2ᵀ ⊗ F1 + F2 ⊗ F1ᵀ) + diag(vec(Kp))` is symmetric and has the
/// same quadratic form as `tr(Xᵀ F1 X F2) + tr(Kpᵀ X)` on binary `X`; it
/// reduces to `F2 ⊗ F1` when both matrices are symmetric.
pub fn kb_to_lawler<T: Scalar>(
    f1: &DenseMatrix<T>,
    f2: &DenseMatrix<T>,
    kp: Option<&DenseMatrix<T>>,
) -> Result<QapInstance<T>> {
    kb_to_lawler_capped(f1, f2, kp, DEFAULT_KRON_CAP)
}

pub fn kb_to_lawler_capped<T: Scalar>(
    f1: &DenseMatrix<T>,
    f2: &DenseMatrix<T>,
    kp: Option<&DenseMatrix<T>>,
    cap: usize,
) -> Result<QapInstance<T>> {
    check_kb_shapes(f1, f2, kp)?;
    let (n1, n2) = (f1.rows(), f2.rows());
    let a = kron_capped(&f2.transpose(), f1, cap)?;
    let half = T::lit(0.5);
    let mut k = DenseMatrix::from_fn(a.rows(), a.cols(), |p, q| half * (a[(p, q)] + a[(q, p)]));
    if let Some(kp) = kp {
        for (p, v) in kp.vec().into_iter().enumerate() {
            k[(p, p)] += v;
        }
    }
    QapInstance::lawler(SparseMatrix::from_dense(&k), n1, n2, Sense::Maximize)
}
