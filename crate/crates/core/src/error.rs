use std::fmt;

use thiserror::Error;

/// Which resource budget a run ran out of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Time,
    Memory,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetKind::Time => f.write_str("time"),
            BudgetKind::Memory => f.write_str("memory"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The brute-force paths (oracle, naive miner) refuse inputs past their
    /// configured size unless forced.
    #[error("safety bound exceeded: {0}")]
    SafetyBound(String),

    #[error("{0} budget exceeded")]
    BudgetExceeded(BudgetKind),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
