//! Error type shared across the crate.
//!
//! Recoverable problems (bad configuration, malformed input files, rank
//! deficiency) surface as [`Error`]. Programming-contract violations such as
//! mixing fixed-point formats or replaying stale rotation parameters panic
//! with a descriptive message instead; they indicate a bug in the caller, not
//! a runtime condition.

use thiserror::Error;

/// Errors reported by the preprocessor model.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A signal or report file could not be parsed.
    #[error("parse error in {path} at {location}: {message}")]
    Parse {
        /// File that failed to parse.
        path: String,
        /// Line or byte position of the failure.
        location: String,
        /// What went wrong.
        message: String,
    },

    /// An eigenvalue fell below the whitening floor.
    #[error(
        "rank-deficient spectrum: eigenvalue {index} = {value:.3e} is below the floor {floor:.3e}"
    )]
    RankDeficient {
        /// Index of the offending eigenvalue (descending order).
        index: usize,
        /// Its value.
        value: f64,
        /// The floor it violated.
        floor: f64,
    },

    /// An iterative routine failed to converge within its sweep budget.
    #[error("no convergence after {sweeps} sweeps (off-norm {off_norm:.3e})")]
    NoConvergence {
        /// Sweeps executed.
        sweeps: usize,
        /// Off-diagonal Frobenius norm at abort.
        off_norm: f64,
    },

    /// Wrapped I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
