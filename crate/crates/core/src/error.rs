use thiserror::Error;

/// Errors raised anywhere in the discretisation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("face {face} is shared by {count} elements (non-manifold)")]
    NonManifoldFace { face: usize, count: usize },

    #[error("degenerate cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("empty condensed system: the mesh has no internal faces")]
    EmptySystem,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerically singular system (lambda_min estimate {lambda_min_estimate:?}): {reason}")]
    Singular {
        reason: String,
        lambda_min_estimate: Option<f64>,
    },

    #[error("eigensolver did not converge: achieved residual {residual:e} after {iterations} iterations")]
    EigenNotConverged { residual: f64, iterations: usize },

    #[error("aggregation failed: {0}")]
    Aggregation(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
