use thiserror::Error;

use crate::system::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    Invalid(ValidationReport),

    #[error("mode index {index} out of range ({count} modes)")]
    ModeOutOfRange { index: usize, count: usize },

    #[error("mode {index}: {reason}")]
    ModeShape { index: usize, reason: String },

    #[error("path is not chained: edge {at} does not start where edge {prev} ends")]
    BrokenPath { prev: usize, at: usize },

    #[error("unknown edge label {0}")]
    UnknownLabel(usize),

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("subpath ({i}:{j}) out of range for a path of length {len}")]
    SubpathRange { i: usize, j: usize, len: usize },

    #[error("horizon must be at least 1")]
    ZeroHorizon,

    #[error("gamma {gamma} does not exceed ||D_pi||_2 = {d_norm} on path {path:?}")]
    GammaTooSmall { gamma: f64, d_norm: f64, path: Vec<usize> },

    #[error("maximization over w is not concave on suffix starting at step {step} of path {path:?}")]
    NotConcave { step: usize, path: Vec<usize> },

    #[error("gamma {gamma} must exceed the horizon-{horizon} lower bound {lower}")]
    BelowLowerBound { gamma: f64, lower: f64, horizon: usize },

    #[error("unsupported p-norm {0}; use 1, 2 or inf")]
    UnsupportedNorm(String),

    #[error("no upper bound certified at horizon {0}")]
    NoUpperBound(usize),

    #[error("system is not internally stable (cycle bound {rho_lower})")]
    Unstable { rho_lower: f64 },

    #[error("LMI solver inconclusive: {0}")]
    Inconclusive(String),

    #[error("LMI problem infeasible")]
    Infeasible,

    #[error("unknown solver backend {0:?}")]
    UnknownBackend(String),

    #[error("converse check requires a uniform state dimension")]
    NotSquare,

    #[error("level sets need a node of dimension 2 or 3, got {0}")]
    LevelSetDim(usize),

    #[error("storage is not positive definite along direction {0:?}")]
    NotDefinite(Vec<f64>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
