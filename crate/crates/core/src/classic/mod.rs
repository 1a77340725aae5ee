//! Learning-free baselines on the Lawler affinity matrix.

mod rrwm;
mod spectral;

pub use rrwm::{rrwm, RrwmConfig, RrwmOutcome};
pub use spectral::{spectral_match, spectral_match_with, PowerConfig, SpectralOutcome};

use crate::error::Result;
use crate::numerics::{hungarian, Assignment, DenseMatrix};
use crate::scalar::Scalar;

/// Continuous `n1 x n2` matching matrix.
pub type SoftMatch<T> = DenseMatrix<T>;

/// Hungarian rounding of a soft match (maximizing total score).
pub fn discretize<T: Scalar>(s: &SoftMatch<T>) -> Result<Assignment> {
    hungarian(s)
}
