//! Error type shared by every module of the library.

use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BsError {
    /// An argument is outside the documented domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A kernel or special function was evaluated at its singular point.
    #[error("singular evaluation: {0}")]
    Singular(String),
    /// The requested evaluation would overflow or exceeds a supported range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A dense solver or an iteration failed to produce a usable result.
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    /// The partial-wave sum did not converge before the configured cap.
    #[error("truncation failure at L = {l}: {detail}")]
    TruncationFailure { l: usize, detail: String },
    /// The contour of an argument-principle count passes too close to a zero.
    #[error("boundary conflict: {0}")]
    BoundaryConflict(String),
    /// A winding number was too far from an integer to be trusted.
    #[error("winding number not resolved: {0}")]
    Resolution(String),
    /// A series was requested outside its disc of convergence.
    #[error("divergent series: {0}")]
    Divergent(String),
    /// The operation is not available for the given input kind.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The evaluation point sits too close to a zero of the determinant.
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, BsError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BsError::InvalidArgument(msg.into()))
}
