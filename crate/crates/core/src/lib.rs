//! Neural and learning-free solvers for Lawler's quadratic assignment
//! problem: association-graph networks (NGM, NGM+, NHGM, NMGM), spectral
//! matching, reweighted random walks, and the synthetic and QAPLIB
//! benchmark harnesses around them.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod affinity;
pub mod autodiff;
pub mod bench;
pub mod classic;
pub mod error;
pub mod multigraph;
pub mod ngm;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DenseMatrix64 = numerics::DenseMatrix<f64>;
pub type DenseMatrix32 = numerics::DenseMatrix<f32>;
pub type SparseMatrix64 = numerics::SparseMatrix<f64>;
pub type SparseMatrix32 = numerics::SparseMatrix<f32>;
pub type SoftMatch64 = classic::SoftMatch<f64>;
pub type SoftMatch32 = classic::SoftMatch<f32>;
pub type Tape64 = autodiff::Tape<f64>;
pub type Tape32 = autodiff::Tape<f32>;
pub type NetParams64 = ngm::NetParams<f64>;
pub type NetParams32 = ngm::NetParams<f32>;
pub type Problem64 = ngm::Problem<f64>;
pub type Problem32 = ngm::Problem<f32>;
pub type Checkpoint64 = ngm::Checkpoint<f64>;
pub type Checkpoint32 = ngm::Checkpoint<f32>;
