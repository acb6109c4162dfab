use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or input files; exit code 2.
    #[error("{0}")]
    Validation(String),
    /// Failure while running the pipeline; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// Errors raised while reading user inputs count as validation failures.
    pub fn input(e: hmkl::Error) -> Self {
        match e {
            hmkl::Error::Parse { .. }
            | hmkl::Error::Io { .. }
            | hmkl::Error::Invalid(_)
            | hmkl::Error::Dimension(_)
            | hmkl::Error::Image { .. }
            | hmkl::Error::Json(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<hmkl::Error> for CliError {
    fn from(e: hmkl::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
