use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes of the `hpod` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Config = 2,
    Data = 3,
    Numerical = 4,
    Version = 5,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error in {path}: {msg}")]
    Data { path: PathBuf, msg: String },

    #[error("version mismatch: file written by format {found}, this build reads format {expected}")]
    Version { found: String, expected: String },

    #[error(transparent)]
    Core(#[from] hpod_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn data(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::Data { path: path.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> ExitCode {
        use hpod_core::Error as E;
        match self {
            CliError::Config(_) => ExitCode::Config,
            CliError::Data { .. } | CliError::Json { .. } => ExitCode::Data,
            CliError::Version { .. } => ExitCode::Version,
            CliError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => ExitCode::Config,
            CliError::Io { .. } => ExitCode::Data,
            CliError::Core(e) => match e {
                E::Numerical(_) => ExitCode::Numerical,
                E::UnknownAlgorithm(_) | E::OutOfDomain { .. } => ExitCode::Config,
                E::SchemaMismatch { .. } => ExitCode::Version,
                E::InvalidInput(_) | E::LengthMismatch { .. } | E::SingleClass | E::Detector(_) => ExitCode::Data,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
