use thiserror::Error;

use crate::exec::ExecError;
use crate::scc::SccError;

/// Failures of the decision procedures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("program contains method calls; use the recursive procedure")]
    Recursive,
    #[error("program has no method calls; use the flat procedure")]
    NotRecursive,
    #[error("state budget of {limit} exceeded")]
    StateBudget { limit: usize },
    #[error("subset budget of {limit} exceeded")]
    SubsetBudget { limit: usize },
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Scc(#[from] SccError),
}
