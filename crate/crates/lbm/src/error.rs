use crate::bc::BoundaryEdge;

/// Errors produced by the solver crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("non-positive density {value:e} at node ({x}, {y})")]
    NonPositiveDensity { x: usize, y: usize, value: f64 },

    #[error("non-finite reaction term at node ({x}, {y}) for phi = {phi:e}")]
    NonFiniteReaction { x: usize, y: usize, phi: f64 },

    #[error("duplicate boundary rule for edge {0:?}")]
    DuplicateEdge(BoundaryEdge),

    #[error("boundary rule incompatible with this solver: {0}")]
    IncompatibleBc(String),

    #[error("numerical instability: non-finite or degenerate field after step {step}")]
    Unstable { step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("task description error: {0}")]
    Description(String),

    #[error("vtk format error in {path}: {reason}")]
    Vtk { path: String, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("checksum mismatch for {path}: manifest {expected}, file {actual}")]
    ChecksumMismatch {
        path: String,
        expected: String,
        actual: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
