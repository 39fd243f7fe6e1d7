use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackflowError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver did not converge after {iterations} iterations (best estimate {lambda:e}, residual {residual:e})")]
    NoConvergence {
        lambda: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("grid refinement did not converge by h = {h_max}; eigenvalue sequence {sequence:?}")]
    RefinementExhausted { h_max: usize, sequence: Vec<f64> },

    #[error("all {restarts} restarts produced degenerate trial functions ({detail})")]
    DegenerateFit { restarts: usize, detail: String },
}

pub type Result<T, E = BackflowError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(BackflowError::Domain(msg.into()))
}
