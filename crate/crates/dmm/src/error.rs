//! Error types shared across the crate.

use crate::network::Violation;
use thiserror::Error;

/// A parse diagnostic with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(line: u32, column: u32, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            column,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(ParseDiagnostic),

    #[error("invalid network: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    /// Kind or arity inconsistency detected while executing. Unreachable on
    /// machines that passed validation; kept as a defensive backstop.
    #[error("malformed network: {0}")]
    Malformed(String),

    /// Execution halted, e.g. a self-update produced an ill-kinded matrix.
    #[error("halted at tick {tick}: {source}")]
    Halted { tick: u64, source: Box<Error> },
}

impl Error {
    pub fn parse(line: u32, column: u32, message: impl Into<String>) -> Self {
        Error::Parse(ParseDiagnostic::new(line, column, message))
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        Error::Malformed(message.into())
    }

    pub fn halted(tick: u64, source: Error) -> Self {
        Error::Halted {
            tick,
            source: Box::new(source),
        }
    }
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
