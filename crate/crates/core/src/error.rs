use thiserror::Error;

/// Errors raised by the library. Sampled violations are never errors; they
/// are reported as data in a [`CheckReport`](crate::CheckReport).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point} is outside the domain of `{space}`: {reason}")]
    Domain {
        space: String,
        point: String,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown space key `{0}` (expected perimeter-<dim>, max-<dim> or sign-example)")]
    UnknownSpace(String),

    #[error("precondition `{constraint}` violated: {detail}")]
    Precondition { constraint: String, detail: String },

    #[error("contraction factor {delta} is not below 1; the product bound is vacuous")]
    VacuousBound { delta: f64 },

    #[error("trace has no true-error column; a known fixed point is required")]
    MissingTrueError,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(constraint: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Precondition {
            constraint: constraint.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
