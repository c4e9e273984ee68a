use thiserror::Error;

/// Errors that stop a run before any check is evaluated.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Output(String),
    /// the scenario was valid but a trajectory could not be computed
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            _ => 2,
        }
    }
}

impl From<hidsym::Error> for CliError {
    fn from(e: hidsym::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
