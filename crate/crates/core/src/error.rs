use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A point is not a member of the space it was used with.
    #[error("point is not a member of the space: {0}")]
    NotMember(String),

    /// Two descriptors that must agree do not.
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    /// The requested strategy cannot be applied to this map or space.
    #[error("infeasible strategy: {0}")]
    Infeasible(String),

    /// A computation would exceed its configured budget.
    #[error("budget exceeded: {what} would exceed {limit}")]
    BudgetExceeded { what: &'static str, limit: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
