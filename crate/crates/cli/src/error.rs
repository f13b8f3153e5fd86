use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o failure: {0}")]
    Io(String),

    /// The run completed but a checked inequality failed.
    #[error("check failed: {0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    /// The diagnostic flattened to one line.
    pub fn one_line(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl From<latorbit_core::Error> for CliError {
    fn from(e: latorbit_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
