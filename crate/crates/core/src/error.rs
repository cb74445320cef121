use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("unbounded unit ball: {0}")]
    UnboundedBall(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration budget exceeded: {predicted} candidate points predicted, budget {budget}")]
    EnumerationBudgetExceeded { predicted: String, budget: u64 },

    #[error("undecidable comparison: interval refinement floor reached ({0})")]
    Undecidable(String),

    #[error("integer overflow in exact evaluation: {0}")]
    NumericRange(String),

    #[error("invalid rational literal {0:?}")]
    ParseRational(String),

    #[error("invalid ledger: {0}")]
    InvalidLedger(String),

    #[error("infeasible ledger: {0}")]
    InfeasibleLedger(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Short stable identifier used in JSON error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidNorm(_) => "InvalidNorm",
            Error::UnboundedBall(_) => "UnboundedBall",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EnumerationBudgetExceeded { .. } => "EnumerationBudgetExceeded",
            Error::Undecidable(_) => "Undecidable",
            Error::NumericRange(_) => "NumericRange",
            Error::ParseRational(_) => "ParseRational",
            Error::InvalidLedger(_) => "InvalidLedger",
            Error::InfeasibleLedger(_) => "InfeasibleLedger",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }

    /// True for errors that stem from resource limits rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::EnumerationBudgetExceeded { .. } | Error::Undecidable(_) | Error::NumericRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
