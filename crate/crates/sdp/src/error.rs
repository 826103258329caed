use thiserror::Error;

/// Problems rejected by the validation pass, before any numerical work.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("variable `{name}` has dimension 0")]
    EmptyVariable { name: String },

    #[error("{context}: references undeclared variable #{var}")]
    UnknownVariable { context: String, var: usize },

    #[error("{context}: entry ({row}, {col}) lies outside the {dim}x{dim} variable `{var}`")]
    EntryOutOfRange {
        context: String,
        var: String,
        row: usize,
        col: usize,
        dim: usize,
    },

    #[error("{context}: non-finite coefficient or bound")]
    NonFinite { context: String },

    #[error("interval constraint `{name}`: lower bound {lower} exceeds upper bound {upper}")]
    IntervalOrder { name: String, lower: f64, upper: f64 },

    #[error("psd constraint `{name}`: output entry ({row}, {col}) is not in the upper triangle of a {dim}x{dim} map")]
    MapEntry {
        name: String,
        row: usize,
        col: usize,
        dim: usize,
    },

    #[error("psd constraint `{name}`: constant term is not Hermitian (diagonal entry {index} has imaginary part {imag:e})")]
    NonHermitianConstant { name: String, index: usize, imag: f64 },

    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("problem serialization failed: {0}")]
    Json(String),
}

impl From<serde_json::Error> for SdpError {
    fn from(err: serde_json::Error) -> Self {
        SdpError::Json(err.to_string())
    }
}
