//! CLI error taxonomy. Exit codes: configuration problems exit 2, protocol
//! failures exit 3, audit failures exit 4.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Protocol(String),
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Protocol(_) => 3,
            CliError::Audit(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Protocol(m) => write!(f, "protocol error: {m}"),
            CliError::Audit(m) => write!(f, "audit failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<aegis_core::Error> for CliError {
    fn from(e: aegis_core::Error) -> Self {
        use aegis_core::Error as E;
        match e {
            E::InvalidConfig(_)
            | E::Malformed(_)
            | E::TooFewWorkers { .. }
            | E::FieldOverflow { .. }
            | E::OverflowRisk { .. } => CliError::Config(e.to_string()),
            _ => CliError::Protocol(e.to_string()),
        }
    }
}
