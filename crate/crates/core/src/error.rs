use thiserror::Error;

/// Errors raised by channel construction, deconvolution and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("channel is not invertible (smallest singular value {sigma_min:.3e} <= cutoff {cutoff:.3e})")]
    SingularChannel { sigma_min: f64, cutoff: f64 },

    #[error("channel is not trace preserving (residual {residual:.3e} > tol {tol:.1e})")]
    NotTracePreserving { residual: f64, tol: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("family self-verification failed: max delta_nd {max_delta:.3e} > {tol:.1e}")]
    VerificationFailed { max_delta: f64, tol: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid override `{key}`: {reason}")]
    InvalidOverride { key: String, reason: String },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
