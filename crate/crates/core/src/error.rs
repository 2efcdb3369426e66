use thiserror::Error;

/// Errors raised by the numerical and statistical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FabError {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("{what} failed to converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("optimization failed in {what}: {reason} (best point {best:?}, value {value:e})")]
    Optimization {
        what: &'static str,
        reason: String,
        best: Vec<f64>,
        value: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl FabError {
    pub(crate) fn domain(what: &'static str, value: impl Into<f64>) -> Self {
        FabError::Domain {
            what,
            value: value.into(),
        }
    }

    /// True for failures caused by numerical non-convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FabError::Convergence { .. } | FabError::Optimization { .. }
        )
    }
}

pub type Result<T, E = FabError> = std::result::Result<T, E>;
