use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid projective point: all homogeneous coordinates vanish")]
    InvalidPoint,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected N = {expected}, found N = {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("curve is not locally constant near the gluing point (max distance {max_distance:.3e} > {delta:.3e})")]
    NotLocallyConstant { max_distance: f64, delta: f64 },
    #[error("unsupported curve: {0}")]
    UnsupportedCurve(String),
    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),
    #[error("target unreachable: {0}")]
    TargetUnreachable(String),
    #[error("infeasible distortion {target:.6e}: minimum achievable is {minimum:.6e}")]
    Infeasible { target: f64, minimum: f64 },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("non-finite observable value at sample {index}")]
    NonFiniteObservable { index: u64 },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
