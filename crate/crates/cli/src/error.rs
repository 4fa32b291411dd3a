use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {reason}")]
    Schema { key: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("cannot read report {path}: {reason}")]
    ReportParse { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{algorithm} seed {seed}: {source}")]
    Run {
        algorithm: &'static str,
        seed: u64,
        #[source]
        source: fedclus_core::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl CliError {
    /// 1 for problems with the inputs, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Usage(_) | CliError::ReportParse { .. } => 1,
            CliError::Io { .. } | CliError::Run { .. } | CliError::ThreadPool(_) => 2,
        }
    }

    /// Short tag naming where the failure happened.
    pub fn stage(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::ReportParse { .. } => "report",
            CliError::Io { .. } => "io",
            CliError::Run { source, .. } => match source {
                fedclus_core::Error::Stage { stage, .. } => stage,
                _ => "run",
            },
            CliError::ThreadPool(_) => "threads",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
