use thiserror::Error;

/// Errors raised by the metric, geometry and simulation kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric undefined on empty set")]
    EmptySet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("size mismatch: {left} paired with {right} points")]
    SizeMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0}; only 2 and 3 are supported")]
    UnsupportedDimension(usize),

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wrap undefined on a box region")]
    WrapUndefined,

    #[error("empty image: no emitter was activated")]
    EmptyImage,

    #[error("degenerate zero-error image")]
    DegenerateImage,

    #[error("small-error premise fails: {0}")]
    PremiseViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
