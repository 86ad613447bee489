use std::fmt;

use affdim_core::Error as CoreError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Pass = 0,
    Fail = 1,
    Input = 2,
    Budget = 3,
    Io = 4,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Input, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Io, message)
    }

    /// Prefixes the message with the pipeline stage that raised it.
    pub fn in_stage(self, stage: &str) -> Self {
        Self {
            code: self.code,
            message: format!("stage '{stage}': {}", self.message),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Budget { .. } => ExitCode::Budget,
            CoreError::InvalidInput(_)
            | CoreError::Precondition(_)
            | CoreError::DuplicateTranslations(_)
            | CoreError::UnsupportedDimension { .. } => ExitCode::Input,
            CoreError::DegenerateFit(_) | CoreError::Renormalization(_) => ExitCode::Fail,
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
