use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Conjugate gradient met a direction with non-positive curvature, which
    /// means the system handed to it is not symmetric positive definite.
    #[error("CG breakdown at iteration {iteration}: direction curvature {curvature:e} <= 0")]
    CgBreakdown { iteration: usize, curvature: f64 },

    #[error("non-finite {quantity} at iteration {iteration}")]
    NonFinite {
        quantity: &'static str,
        iteration: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outer iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("lambda index {index} (lambda = {lambda:e}): {source}")]
    AtLambda {
        index: usize,
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a CG breakdown, looking through the
    /// iteration and lambda wrappers.
    pub fn is_breakdown(&self) -> bool {
        match self {
            Error::CgBreakdown { .. } => true,
            Error::AtIteration { source, .. } | Error::AtLambda { source, .. } => {
                source.is_breakdown()
            }
            _ => false,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}
