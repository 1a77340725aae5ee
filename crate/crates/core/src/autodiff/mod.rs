//! Matrix-level reverse-mode differentiation.

mod tape;

pub use tape::{EdgeList, GradientTape, Tape, Var};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `x W + 1 bᵀ`.
pub fn linear<T: Scalar>(tape: &mut Tape<T>, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    tape.add_row_bias(xw, b)
}

/// Unrolled Sinkhorn on a positive `n1 x n2` node (`n1 <= n2`): rows are
/// padded with `eps` up to a square, then `iters` rounds of column and row
/// normalization; the padding is sliced off again.
pub fn sinkhorn_unrolled<T: Scalar>(tape: &mut Tape<T>, s: Var, iters: usize, eps: T) -> Result<Var> {
    let (n1, n2) = tape.shape(s);
    if n1 > n2 {
        return Err(Error::Shape(format!("unrolled sinkhorn expects rows <= cols, got {n1}x{n2}")));
    }
    if iters == 0 {
        return Err(Error::Config("unrolled sinkhorn needs at least one iteration".into()));
    }
    let mut x = if n1 < n2 {
        let map = (0..n2 * n2).map(|k| (k < n1 * n2).then_some(k)).collect();
        tape.gather(s, n2, n2, Arc::new(map), eps)?
    } else {
        s
    };
    for _ in 0..iters {
        x = tape.col_normalize(x)?;
        x = tape.row_normalize(x)?;
    }
    if n1 < n2 {
        let map = (0..n1 * n2).map(Some).collect();
        x = tape.gather(x, n1, n2, Arc::new(map), T::zero())?;
    }
    Ok(x)
}
