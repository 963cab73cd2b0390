//! Command-line front end: JSON run configs in, CSV and JSON artifacts out.

pub mod commands;
pub mod config;
pub mod export;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rds_circle::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 ok, 2 config, 3 structure, 4 conjugacy construction, 5 numeric or internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => e.exit_code(),
            CliError::Json(_) => 5,
        }
    }
}
