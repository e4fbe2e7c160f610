use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or geometry violates a precondition.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Synthesis produced non-finite samples.
    #[error("synthesis error: {0}")]
    Synthesis(String),

    /// Inputs that must share a sample grid do not.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A capture file does not match its declared layout.
    #[error("capture format error: {0}")]
    Format(String),

    /// A scenario file failed to parse or validate.
    #[error("{}: {key}{}: {message}", path.display(), line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Scenario {
        path: PathBuf,
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Scenario { .. }
        )
    }
}
