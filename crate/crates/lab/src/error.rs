use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error in `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error(transparent)]
    Core(#[from] nfl_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Errors detected before any computation started.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Self::Parse(_) | Self::Schema { .. })
    }
}
