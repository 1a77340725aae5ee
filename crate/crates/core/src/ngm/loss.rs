use std::sync::Arc;

use crate::affinity::Sense;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::numerics::{Assignment, DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

pub const CE_CLAMP_LO: f64 = 1e-7;
pub const CE_CLAMP_HI: f64 = 1.0 - 1e-7;

/// Binary cross-entropy between a soft match and a ground-truth assignment,
/// summed over all entries. Probabilities are clipped to
/// `[CE_CLAMP_LO, CE_CLAMP_HI]` first.
pub fn perm_loss<T: Scalar>(tape: &mut Tape<T>, s: Var, gt: &Assignment) -> Result<Var> {
    let (r, c) = tape.shape(s);
    if (gt.rows(), gt.cols()) != (r, c) {
        return Err(Error::Shape(format!(
            "{r}x{c} prediction against a {}x{} assignment",
            gt.rows(),
            gt.cols()
        )));
    }
    let x: DenseMatrix<T> = gt.to_dense();
    let not_x = x.map(|v| T::one() - v);
    let x = tape.leaf(x);
    let not_x = tape.leaf(not_x);
    let p = tape.clamp(s, T::lit(CE_CLAMP_LO), T::lit(CE_CLAMP_HI));
    let log_p = tape.log(p)?;
    let q = tape.affine(p, -T::one(), T::one());
    let log_q = tape.log(q)?;
    let a = tape.mul(x, log_p)?;
    let b = tape.mul(not_x, log_q)?;
    let both = tape.add(a, b)?;
    let total = tape.sum(both);
    Ok(tape.scale(total, -T::one()))
}

/// `vec(S)ᵀ K vec(S)`, negated for maximization so that training always
/// descends.
pub fn qap_loss<T: Scalar>(tape: &mut Tape<T>, s: Var, k: &Arc<SparseMatrix<T>>, sense: Sense) -> Result<Var> {
    let (r, c) = tape.shape(s);
    if k.rows() != r * c || k.cols() != r * c {
        return Err(Error::Shape(format!(
            "{}x{} affinity for a {r}x{c} prediction",
            k.rows(),
            k.cols()
        )));
    }
    let v = tape.vec(s)?;
    let kv = tape.spmm(k.clone(), v)?;
    let prod = tape.mul(v, kv)?;
    let total = tape.sum(prod);
    Ok(match sense {
        Sense::Maximize => tape.scale(total, -T::one()),
        Sense::Minimize => total,
    })
}

/// Loss value and gradient with respect to `s` for a fixed prediction.
pub fn perm_loss_with_grad<T: Scalar>(s: &DenseMatrix<T>, gt: &Assignment) -> Result<(T, DenseMatrix<T>)> {
    let mut tape = Tape::new();
    let sv = tape.leaf(s.clone());
    let l = perm_loss(&mut tape, sv, gt)?;
    tape.backward(l)?;
    Ok((tape.value(l)[(0, 0)], tape.grad_or_zero(sv)))
}

pub fn qap_loss_with_grad<T: Scalar>(s: &DenseMatrix<T>, k: &SparseMatrix<T>, sense: Sense) -> Result<(T, DenseMatrix<T>)> {
    let mut tape = Tape::new();
    let sv = tape.leaf(s.clone());
    let l = qap_loss(&mut tape, sv, &Arc::new(k.clone()), sense)?;
    tape.backward(l)?;
    Ok((tape.value(l)[(0, 0)], tape.grad_or_zero(sv)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::lawler_objective;
    use crate::numerics::finite_diff_grad;

    #[test]
    fn exact_prediction_has_near_zero_loss() {
        let gt = Assignment::new(3, vec![2, 0, 1]).unwrap();
        let (l, _) = perm_loss_with_grad(&gt.to_dense::<f64>(), &gt).unwrap();
        assert!(l > 0.0 && l < 1e-5, "{l}");
    }

    #[test]
    fn uniform_half_is_four_log_two() {
        let s = DenseMatrix::filled(2, 2, 0.5);
        let (l, _) = perm_loss_with_grad(&s, &Assignment::identity(2)).unwrap();
        assert!((l - 4.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clamped_loss_is_finite_at_the_extremes() {
        let s = DenseMatrix::<f64>::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let (l, g) = perm_loss_with_grad(&s, &Assignment::identity(2)).unwrap();
        assert!(l.is_finite() && g.all_finite());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let s = DenseMatrix::from_f64_rows(&[&[0.2, 0.5, 0.3], &[0.6, 0.1, 0.3], &[0.2, 0.4, 0.4]]).unwrap();
        let gt = Assignment::new(3, vec![1, 0, 2]).unwrap();
        let (_, g) = perm_loss_with_grad(&s, &gt).unwrap();
        let fd = finite_diff_grad(
            |v: &[f64]| perm_loss_with_grad(&DenseMatrix::from_vec(3, 3, v.to_vec()).unwrap(), &gt).unwrap().0,
            s.data(),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.data().iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0));
        }

        let k = SparseMatrix::from_dense(&DenseMatrix::from_fn(9, 9, |i, j| ((i * 5 + j * 3) % 7) as f64 / 7.0));
        let (_, g) = qap_loss_with_grad(&s, &k, Sense::Minimize).unwrap();
        let fd = finite_diff_grad(
            |v: &[f64]| qap_loss_with_grad(&DenseMatrix::from_vec(3, 3, v.to_vec()).unwrap(), &k, Sense::Minimize).unwrap().0,
            s.data(),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.data().iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0));
        }
    }

    #[test]
    fn qap_loss_on_a_permutation_is_the_objective() {
        let k = SparseMatrix::from_dense(&DenseMatrix::from_fn(9, 9, |i, j| (i + 2 * j) as f64));
        let x = Assignment::new(3, vec![2, 0, 1]).unwrap();
        let (l, _) = qap_loss_with_grad(&x.to_dense(), &k, Sense::Minimize).unwrap();
        assert_eq!(l, lawler_objective(&k, &x).unwrap());
        let (l, _) = qap_loss_with_grad(&x.to_dense(), &k, Sense::Maximize).unwrap();
        assert_eq!(l, -lawler_objective(&k, &x).unwrap());
    }

    #[test]
    fn zero_affinity_gives_zero_loss_and_gradient() {
        let (l, g) = qap_loss_with_grad(&DenseMatrix::filled(2, 2, 0.5), &SparseMatrix::empty(4, 4), Sense::Maximize).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }
}
