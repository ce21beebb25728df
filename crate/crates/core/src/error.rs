use empnet_solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("phase violation: {0}")]
    Phase(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("epsilon is unbounded: no constraint mentions it")]
    Unbounded,
    #[error("{target} conflicts with statements {statements:?}")]
    TargetConflict { target: String, statements: Vec<String> },
    #[error("power iteration did not converge after {iterations} steps (last change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("solver failure: {source}; program dump:\n{dump}")]
    Solver { source: SolverError, dump: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("storage: {0}")]
    Storage(#[from] crate::session::StoreError),
}

impl CoreError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
