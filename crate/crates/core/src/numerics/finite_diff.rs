use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad<T: Scalar>(mut f: impl FnMut(&[T]) -> T, x: &[T], h: T) -> Result<Vec<T>> {
    if h <= T::zero() {
        return Err(Error::Invalid(format!("finite-difference step {h} must be positive")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("finite-difference probe"));
        }
        grad.push((up - down) / (T::lit(2.0) * h));
    }
    Ok(grad)
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero gradients
/// from turning round-off into a large relative error.
pub fn relative_error<T: Scalar>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
