//! NMGM: pairwise NGM outputs fused by differentiable permutation
//! synchronization.
//!
//! NMGM-T is [`nmgm_forward`] with parameters trained pairwise and no
//! further updates.

mod joint;
mod nmgm;

pub use joint::{build_joint, pair_list, synchronize, synchronize_on, FallbackRule, JointMatching, SyncConfig, SyncInfo, SyncOutcome};
pub use nmgm::{mean_accuracy, nmgm_forward, nmgm_step_grads, train_nmgm, train_nmgm_fresh, MultiForward, MultiSample};
