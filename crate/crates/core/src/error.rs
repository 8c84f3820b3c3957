use thiserror::Error;

/// Errors raised by fitting, path construction and data validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("data needs at least one point, got {0}")]
    TooFewPoints(usize),
    #[error("data needs at least two dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("penalty must be a nonnegative finite number, got {0}")]
    InvalidLambda(f64),
    #[error("vector must be nonzero")]
    ZeroVector,
    #[error("preserved column {0} is all zeros")]
    DegenerateColumn(usize),
    #[error("feature index {index} out of range for {m} dimensions")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("preserved and target coordinates coincide ({0})")]
    SameCoordinate(usize),
    #[error("certificate infeasible: {0}")]
    CertificateInfeasible(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid path input: {0}")]
    InvalidPath(String),
    #[error("data matrix is all zeros")]
    ZeroData,
}

pub type Result<T> = std::result::Result<T, FitError>;

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(FitError::InvalidLambda(lambda))
    }
}
