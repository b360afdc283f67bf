//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by density evaluation, assembly, time stepping and the
/// study harness.
#[derive(Debug, Error)]
pub enum LfpError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}) while {context}")]
    Quadrature {
        tol: f64,
        estimate: f64,
        context: String,
    },

    #[error("linear solve failed: {reason} (pivot ratio estimate {pivot_ratio:e})")]
    Solver { reason: String, pivot_ratio: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("study aborted at level {level}: {source}")]
    Study {
        level: usize,
        #[source]
        source: Box<LfpError>,
    },

    #[error("{quantity} drifted by {drift:e}, above the tolerance {tol:e}")]
    Conservation { quantity: String, drift: f64, tol: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LfpError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LfpError::Shape { expected, found })
    }
}
