use thiserror::Error;

/// Failure classes of the solver pipeline. Each variant maps to exactly one
/// CLI exit code, so keep the set closed and machine-readable.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A field value left the admissible domain (e.g. a nonpositive value
    /// where a positive power is required).
    #[error("domain error at node {node}: {reason}")]
    DomainError { node: usize, reason: String },

    #[error("numeric failure: {0}")]
    NumericError(String),

    /// A hypothesis of the existence theorem could not be verified.
    #[error("hypothesis failure ({condition}): {detail}")]
    HypothesisFailure { condition: String, detail: String },

    /// A barrier builder exhausted its escalation budget.
    #[error("construction failure: {detail} (worst node {worst_node:?})")]
    ConstructionFailure {
        detail: String,
        worst_node: Option<usize>,
    },

    /// The monotone scheme lost its ordering chain.
    #[error("scheme failure at iteration {iteration}, node {node}: {detail}")]
    SchemeFailure {
        iteration: usize,
        node: usize,
        detail: String,
    },

    #[error("no convergence after {iterations} iterations (last gap {last_gap:.3e})")]
    Nonconvergence { iterations: usize, last_gap: f64 },
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CoreError::InvalidArgument(msg.into())
    }
}
