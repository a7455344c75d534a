use thiserror::Error;

/// Errors raised by constructors and solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("label {label} out of range for a palette of {k} colors")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("grey observation missing on damaged pixel {pixel}")]
    MissingGrey { pixel: usize },
    #[error("invalid distortion table: {0}")]
    InvalidTable(String),
    #[error("invalid flow network: {0}")]
    InvalidNetwork(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
