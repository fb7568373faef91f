use ngcp::CpError;
use thiserror::Error;

/// A failure mapped onto the process exit status.
#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("numerical failure: {0}")]
    Numerical(CpError),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CpError> for CliError {
    fn from(e: CpError) -> Self {
        match e {
            CpError::Io(_) | CpError::Parse { .. } => CliError::Io(e.to_string()),
            CpError::InvalidParameter(_) | CpError::InvalidShape(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
