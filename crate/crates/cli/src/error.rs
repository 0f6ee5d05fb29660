//! CLI error type and the process exit-code policy.
//!
//! Exit codes: 0 success, 2 usage (clap), 3 validation, 4 truncation
//! overflow, 5 unstable coupling. I/O failures use 1.

use std::fmt;

use ratchet_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Validation(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Validation(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::TruncationOverflow { .. }) => 4,
            CliError::Core(CoreError::UnstableCoupling { .. }) => 5,
            CliError::Core(_) | CliError::Validation(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
