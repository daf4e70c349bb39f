use std::path::PathBuf;

use dfdbayes_core::{CalibrationError, DataError, EvalError, ModelError, SimulationError};
use thiserror::Error;

/// Failure of a command. [`RunError::exit_code`] maps it onto the process
/// exit status.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimulationError),
    #[error("calibration failed: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("sampler could not start: {0}")]
    Sampler(#[from] EvalError),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for calibration failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Calibration(_) => 2,
            _ => 1,
        }
    }
}

/// Problems reading a count file.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: file contains no observations")]
    Empty { path: PathBuf },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}
