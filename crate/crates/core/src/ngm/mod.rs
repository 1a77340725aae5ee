//! Neural solvers on the association graph: NGM, NGM-V, NGM+ and NHGM.
//!
//! Vertex aggregation reads `A' W f_m(v)` as the Hadamard-weighted
//! propagation matrix `(A' ⊙ W)` applied to `f_m(v)`, which keeps the work
//! proportional to the support of `K`.

mod checkpoint;
mod config;
mod forward;
mod gradcheck;
mod loss;
mod optim;
mod params;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use config::{NetConfig, Variant};
pub use forward::{
    forward, forward_ngm, forward_ngm_plus, forward_nhgm, forward_on, load_params, sinkhorn_head, Forward, LayerTrace, EXP_FLOOR,
    Problem,
};
pub(crate) use forward::exp_sinkhorn;
pub use gradcheck::{check_param_grads, check_sample_grads, GradCheckReport, GRAD_CHECK_FLOOR, STEP_FACTORS};
pub use loss::{perm_loss, perm_loss_with_grad, qap_loss, qap_loss_with_grad, CE_CLAMP_HI, CE_CLAMP_LO};
pub use optim::{Adam, OptimConfig};
pub use params::{LayerParams, Linear, Mlp, NetParams};
pub use train::{step_grads, train, train_from, EpochRecord, Sample, Supervision, TrainOutcome};
