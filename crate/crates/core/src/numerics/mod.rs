//! Dense/sparse linear-algebra kernels shared by every solver.

mod assignment;
mod dense;
pub mod eigen;
mod finite_diff;
mod hungarian;
mod kron;
pub mod sinkhorn;
mod sparse;
mod tensor;

pub use assignment::Assignment;
pub use dense::DenseMatrix;
pub use eigen::{sym_eig, sym_eig_topk, sym_eig_topk_with, min_consecutive_gap, JacobiConfig, SymEig, TopEigen};
pub use finite_diff::{finite_diff_grad, relative_error, DEFAULT_FD_STEP};
pub use hungarian::hungarian;
pub use kron::{kron, kron_capped, DEFAULT_KRON_CAP};
pub use sinkhorn::{sinkhorn, stochastic_residual, DoublyStochasticResult, SinkhornConfig};
pub use sparse::SparseMatrix;
pub use tensor::{multiplicity, SparseTensor3};
