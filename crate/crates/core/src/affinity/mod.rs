//! Graph construction, affinity matrices/tensors, the association graph
//! and the three QAP objectives.

mod association;
mod delaunay;
mod geometry;
mod kernel;
mod qap;

pub use association::{association_from_affinity, build_association, AssociationGraph};
pub use delaunay::{delaunay, delaunay_triangles};
pub use geometry::{fully_connected, triangle_sines, Graph, PointSet};
pub use kernel::{build_affinity_matrix, build_affinity_tensor, corr_index, DEFAULT_SIGMA2, DEFAULT_SIGMA3};
pub use qap::{
    hyper_objective, kb_objective, kb_to_lawler, kb_to_lawler_capped, lawler_objective, QapForm, QapInstance, Sense,
};
