use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconsistent sector: boundary difference {0} is not close to a multiple of 2π")]
    InconsistentSector(f64),
    #[error("center {center} too close to boundary (|ξ| must be ≤ {limit})")]
    CenterTooCloseToBoundary { center: f64, limit: f64 },
    #[error("degenerate tangent frame: {0}")]
    DegenerateFrame(String),
    #[error("center extraction failed: {0}")]
    ExtractionFailure(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("operator is not positive definite; a tangent frame is required")]
    NeedsProjection,
    #[error("decay fit failed: {0}")]
    FitFailure(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("observer failed at step {step}: {message}")]
    Observer { step: u64, message: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, KinkError>;

pub(crate) fn invalid(msg: impl Into<String>) -> KinkError {
    KinkError::InvalidArgument(msg.into())
}
