//! Error type shared by every module in the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a precondition (bad geometry, malformed record, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A solver found no solution inside its search region.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// An iterative routine exhausted its iteration or truncation budget.
    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

impl Error {
    /// True when the error stems from bad user input rather than a failed
    /// computation. The CLI maps validation errors to exit code 1 and
    /// computation errors to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Io { .. } | Error::Parse { .. }
        )
    }
}
