use thiserror::Error;

/// Errors raised by class constructions, searches and games.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (bad index, empty set, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's contract (inconsistent history, length mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A round index went past the horizon of an expert, tree or game.
    #[error("horizon exceeded: round {round} with horizon {horizon}")]
    Horizon { round: usize, horizon: usize },

    /// An explicit enumeration cap would be exceeded.
    #[error("resource cap `{cap}` exceeded: need {needed}, limit {limit}")]
    Resource {
        cap: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("hypothesis row {row} has length {found}, expected {expected}")]
    LengthMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate hypothesis rows {first} and {second}")]
    DuplicateRows { first: usize, second: usize },

    /// A verdict could not be settled within the configured caps.
    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code class: 1 domain/contract/parse, 2 resource, 3 indeterminate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 2,
            Error::Indeterminate(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
