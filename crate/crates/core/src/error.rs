use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index {index} out of range (have {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// The model document does not match the schema.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    /// The model parsed but a domain invariant fails.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("expectation matrix of letter `{letter}` is not allowable: {detail}")]
    NotAllowable { letter: String, detail: String },

    #[error("state budget of {budget} patterns exceeded before the search closed")]
    Budget { budget: usize },

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("product lost allowability at step {step}: {reduction} reduction is zero")]
    Degenerate { step: usize, reduction: &'static str },

    #[error("no surviving trials out of {trials}")]
    NoSurvivors { trials: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
