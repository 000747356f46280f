use std::fmt::Display;
use std::path::Path;

/// Failures of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or input files; exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The numerics failed on valid inputs; exit code 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn validation(msg: impl Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub(crate) fn file(path: &Path, err: impl Display) -> Self {
        CliError::Validation(format!("{}: {err}", path.display()))
    }

    /// Prefixes the message with some context, keeping the category.
    pub(crate) fn context(self, ctx: impl Display) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{ctx}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{ctx}: {m}")),
        }
    }
}

impl From<cmt_core::Error> for CliError {
    fn from(err: cmt_core::Error) -> Self {
        if err.is_validation() {
            CliError::Validation(err.to_string())
        } else {
            CliError::Numerical(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
