use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Diverged(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<nlpid_core::io::ConfigError> for CliError {
    fn from(e: nlpid_core::io::ConfigError) -> Self {
        match e {
            nlpid_core::io::ConfigError::Read { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            other => CliError::Config(other.to_string()),
        }
    }
}
