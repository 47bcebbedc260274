use thiserror::Error;

use crate::field::FieldError;
use crate::finite_type::TypeError;
use crate::graph::GraphError;

/// Exit code for malformed input.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for an exceeded budget.
pub const EXIT_BUDGET: i32 = 3;
/// Exit code for a failed internal invariant.
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
pub enum CoxError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CoxError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CoxError::Graph(_) | CoxError::Input(_) => EXIT_INPUT,
            CoxError::Field(FieldError::TooLarge { .. }) => EXIT_BUDGET,
            CoxError::Field(_) => EXIT_INPUT,
            CoxError::Budget(_) => EXIT_BUDGET,
            CoxError::Type(_) | CoxError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

pub type Result<T, E = CoxError> = std::result::Result<T, E>;

/// Returns an invariant error unless `cond` holds.
pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CoxError::Invariant(msg()))
    }
}
