use std::path::PathBuf;

/// Errors raised by the models, the optimizer and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("could not place {what} after {attempts} rejection samples")]
    PlacementBudgetExhausted { what: &'static str, attempts: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("unsupported {format} schema version {found} (expected {expected})")]
    SchemaVersion {
        format: &'static str,
        found: u64,
        expected: u64,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("direction undefined between coincident points")]
    CoincidentPoints,

    #[error("degenerate array: pattern is identically zero toward the evaluated direction")]
    DegenerateArray,

    #[error("solution violates the scenario constraints; repair it before evaluation")]
    InfeasibleInput,

    #[error("archive is empty")]
    EmptyArchive,

    #[error("zero cruise speed with a non-zero displacement")]
    ZeroSpeed,

    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("reference point is not dominated by every archive entry")]
    ReferenceDominated,

    #[error("checkpoint incompatible: {0}")]
    CheckpointIncompatible(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
