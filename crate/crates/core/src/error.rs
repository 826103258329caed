use qbench_sdp::{SdpError, SolveStatus};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("dimension must be at least {min}, got {got}")]
    Dimension { min: usize, got: usize },

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    Mismatch {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace {trace} is not 1 (deviation {deviation:e})")]
    Trace { trace: f64, deviation: f64 },

    #[error("|alpha|^2 = {norm_sqr} exceeds the truncation guard D/4 = {limit} (trace deficit would be {deficit:e})")]
    Truncation {
        norm_sqr: f64,
        limit: f64,
        deficit: f64,
    },

    #[error("matrix lacks the phase symmetry (deviation {deviation:e})")]
    Symmetry { deviation: f64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("optimisation failed with status {status:?}: {detail}")]
    Solver { status: SolveStatus, detail: String },

    #[error(transparent)]
    Sdp(#[from] SdpError),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for CoreError {
    fn from(err: serde_json::Error) -> Self {
        CoreError::Json(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
