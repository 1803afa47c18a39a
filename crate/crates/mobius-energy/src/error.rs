use std::io;

use mobius_energy_core::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Parameter(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io",
            CliError::Format(_) => "format",
            CliError::Parameter(_) => "parameter",
            CliError::Usage(_) => "usage",
        }
    }

    /// `ERROR <code>: <message>` on one line.
    pub fn diagnostic(&self) -> String {
        let text = self.to_string();
        let message: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        format!("ERROR {}: {}", self.code(), message.join(" "))
    }
}
