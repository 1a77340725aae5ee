use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("result of size {rows}x{cols} exceeds the configured cap of {cap} entries")]
    SizeCap { rows: usize, cols: usize, cap: usize },

    #[error("degenerate score matrix: {0}")]
    Degenerate(String),

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("{what} did not converge within {iters} iterations")]
    NoConvergence { what: &'static str, iters: usize },

    #[error("all points are collinear")]
    Collinear,

    #[error("association graph has no edges")]
    EmptyAssociation,

    #[error("assignment violates the one-to-one constraints: {0}")]
    Constraint(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("training diverged at step {step}: loss is {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
