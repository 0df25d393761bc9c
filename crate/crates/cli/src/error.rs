use std::path::{Path, PathBuf};

use lecturelens_core::pipeline::PipelineError;
use lecturelens_core::store::StoreError;
use thiserror::Error;

/// Exit code 2 for usage and I/O problems, 1 for failures inside the pipeline.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("[{module}] {message}")]
    Failed { module: &'static str, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn failed(module: &'static str, message: impl Into<String>) -> Self {
        CliError::Failed {
            module,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Failed { .. } => 1,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Store(s) => s.into(),
            other => {
                let module = other.module();
                let text = other.to_string();
                let prefix = format!("[{module}] ");
                let message = text.strip_prefix(&prefix).unwrap_or(&text).to_string();
                CliError::Failed { module, message }
            }
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { path, source } => CliError::Io { path, source },
            other => CliError::failed("store", other.to_string()),
        }
    }
}
