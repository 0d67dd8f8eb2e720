use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The scenario could not be set up (non-homothetic wind, dilation
    /// mismatch, inadmissible region).
    #[error("scenario aborted: {0}")]
    Scenario(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Every setup failure exits with 2; suite failures exit with 1.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
