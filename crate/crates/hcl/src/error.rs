use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] hcl_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed or inconsistent configuration; the message names the key.
    #[error("config: {0}")]
    Config(String),
    /// Unreadable data files; the message names the file, row and column.
    #[error("ingestion: {0}")]
    Ingest(String),
    /// Checkpoint or record files that do not parse.
    #[error("format: {0}")]
    Format(String),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// A rejected training config keeps its message without a second prefix.
    pub fn invalid_config(e: hcl_core::Error) -> Self {
        match e {
            hcl_core::Error::Config(m) => AppError::Config(m),
            other => AppError::Config(other.to_string()),
        }
    }
}
