//! Synthetic point registration, QAPLIB ingestion and evaluation metrics.

pub mod io;
mod metrics;
pub mod qaplib;
mod synth;

pub use metrics::{accuracy, rel_obj_score};
pub use qaplib::{
    category_of, flip_for_maximization, load_qaplib_dir, parse_qaplib, parse_qaplib_solution, serialize_qaplib,
    serialize_qaplib_solution, QaplibInstance,
};
pub use synth::{gen_multi, gen_synthetic, PairInstance, Split, SynthConfig, SynthDataset, SynthSample};
