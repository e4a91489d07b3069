use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("conjugate gradient stalled after {iterations} iterations at relative residual {residual:e}")]
    LinearSolveFailed { iterations: usize, residual: f64 },
    #[error("unsupported B operator `{0}` for the closed-form w-update; supply a custom w-solver")]
    UnsupportedCoupling(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
