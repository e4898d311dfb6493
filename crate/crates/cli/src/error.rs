//! CLI error categories and their exit codes.
//!
//! 0 success, 1 usage, 2 missing artifact, 3 data error.

use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    MissingArtifact(PathBuf),
    Data(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::MissingArtifact(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::MissingArtifact(path) => {
                write!(f, "missing artifact: {}", path.display())
            }
            CliError::Data(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<outfit_core::Error> for CliError {
    fn from(e: outfit_core::Error) -> Self {
        match e {
            outfit_core::Error::Io { ref path, ref source }
                if source.kind() == std::io::ErrorKind::NotFound =>
            {
                CliError::MissingArtifact(path.clone())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Upfront existence check so prerequisite failures name the artifact.
pub fn require_exists(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact(path.to_path_buf()))
    }
}
