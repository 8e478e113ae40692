use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },

    #[error("point lies outside the bound constraints")]
    OutOfBounds,

    #[error("problem `{0}` has no best known value; pass an explicit noise reference")]
    MissingReference(String),

    #[error("unknown problem `{0}` (run `stomads problems` for the built-in list)")]
    UnknownProblem(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Budget(#[from] BudgetExhausted),

    #[error("unsupported run record schema `{0}`")]
    Schema(String),

    #[error("run record: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// The evaluation budget cannot cover the requested number of blackbox calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("evaluation budget exhausted")]
pub struct BudgetExhausted;
