use thiserror::Error;

/// Errors raised by plant construction, controller synthesis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// A controller gain failed one of its validity predicates.
    #[error("invalid gain: {0}")]
    Gain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assumption not satisfied: {0}")]
    Assumption(String),

    #[error("non-finite value while evaluating {context} (coordinate {index})")]
    NonFinite { context: &'static str, index: usize },

    #[error("singular matrix in {what} at {at:?}")]
    Singular { what: &'static str, at: Vec<f64> },

    #[error("equilibrium drift residual {residual:e} exceeds {tol:e}")]
    Inconsistent { residual: f64, tol: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("simulation diverged at t = {t} s")]
    Divergence { t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }
}

pub(crate) fn ensure_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::dim(context, expected, got))
    }
}
