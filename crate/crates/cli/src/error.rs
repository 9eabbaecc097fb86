use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: lpreg::Error },

    #[error("solver failed: {0}")]
    Solver(lpreg::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Solver(_) => 4,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Tags library errors with the exit-code class they belong to.
pub trait Classify<T> {
    fn at(self, path: &Path) -> Result<T>;
    fn solver(self) -> Result<T>;
    fn usage(self) -> Result<T>;
}

impl<T, E: Into<lpreg::Error>> Classify<T> for std::result::Result<T, E> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })
    }

    fn solver(self) -> Result<T> {
        self.map_err(|e| CliError::Solver(e.into()))
    }

    fn usage(self) -> Result<T> {
        self.map_err(|e| CliError::Usage(e.into().to_string()))
    }
}
