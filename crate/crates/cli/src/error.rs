use mtrl_core::Error;

/// CLI failure, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DimensionMismatch { .. }
            | Error::EmptyTask { .. }
            | Error::BadLabel { .. }
            | Error::BadLambda(_)
            | Error::NoTasks
            | Error::BadConfig(_) => CliError::Config(msg),
            Error::ParseError { .. } | Error::ManifestError(_) | Error::Io(_) => CliError::Io(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("IoError: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
