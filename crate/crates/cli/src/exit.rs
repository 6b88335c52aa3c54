use std::fmt;

use lightdic::Error;

pub const OK: u8 = 0;
pub const INPUT: u8 = 2;
pub const FORMAT: u8 = 3;
pub const NUMERIC: u8 = 4;
pub const VERIFY_FAILED: u8 = 5;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: INPUT,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self {
            code: FORMAT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::Bounds { .. }
            | Error::Argument(_)
            | Error::InsufficientLabels { .. }
            | Error::InsufficientEdges(_)
            | Error::Io(_) => INPUT,
            Error::Format(_) | Error::StaleCache { .. } => FORMAT,
            Error::Validation(_) | Error::Diverged { .. } => NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::format(format!("json: {e}"))
    }
}
