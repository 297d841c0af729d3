//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Invalid configuration or parameter combination, rejected before any work.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside an operation's stated domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Index or size out of bounds.
    #[error("bounds error: {0}")]
    Bounds(String),

    /// Iterative solver failed to converge within its budget.
    #[error("numeric error: eigenvalue {index} failed to converge after {sweeps} sweeps")]
    NoConvergence { index: usize, sweeps: usize },

    /// A combinatorial enumeration would exceed its budget; caller must pick a cheaper mode.
    #[error("combinatorial budget exceeded: {0}")]
    CombinatorialBudget(String),

    /// A contract inequality (hypothesis window) is violated; names the inequality.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A precondition of an operation was not met by the supplied data.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// A mathematically guaranteed inequality failed; indicates a solver defect.
    #[error("theorem violation (solver defect): {0}")]
    TheoremViolation(String),

    /// Persisted data failed validation on load.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// File format/version mismatch.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
