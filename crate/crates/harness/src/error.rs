use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("output directory {0} is not empty (pass --force to overwrite)")]
    OutputExists(PathBuf),

    #[error("not found: {0}")]
    NotFound(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] feddw_core::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("cannot encode config as TOML: {0}")]
    TomlEncode(#[from] toml::ser::Error),
}

/// Machine-readable form printed by the CLI on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            return HarnessError::NotFound(path.into());
        }
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config { .. } => "config",
            HarnessError::OutputExists(_) => "output-exists",
            HarnessError::NotFound(_) | HarnessError::Core(feddw_core::Error::NotFound(_)) => "not-found",
            HarnessError::Io { .. } => "io",
            HarnessError::Core(feddw_core::Error::RoundFailure { .. }) => "round-failure",
            HarnessError::Core(feddw_core::Error::InvalidInput(_)) => "invalid-input",
            HarnessError::Core(_) => "run",
            HarnessError::Csv(_) | HarnessError::Json(_) | HarnessError::TomlEncode(_) => "encoding",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "invalid-input" => 2,
            "output-exists" => 3,
            "not-found" => 4,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (key, path) = match self {
            HarnessError::Config { key, .. } => (Some(key.clone()), None),
            HarnessError::OutputExists(p) | HarnessError::NotFound(p) => (None, Some(p.clone())),
            HarnessError::Core(feddw_core::Error::NotFound(p)) => (None, Some(p.clone())),
            HarnessError::Io { path, .. } => (None, Some(path.clone())),
            _ => (None, None),
        };
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            key,
            path,
        }
    }
}
