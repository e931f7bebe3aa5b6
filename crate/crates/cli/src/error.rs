use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("value error at {pointer}: {message}")]
    Value { pointer: String, message: String },

    #[error("{0}")]
    Domain(rm_hopf::Error),

    #[error("cannot write {path}: {source}")]
    WriteOutput {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot configure thread pool: {0}")]
    ThreadPool(String),
}

impl From<rm_hopf::Error> for CliError {
    fn from(e: rm_hopf::Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for domain failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ReadConfig { .. } | CliError::Schema { .. } | CliError::Value { .. } => 2,
            CliError::Domain(rm_hopf::Error::InvalidParameter { .. })
            | CliError::Domain(rm_hopf::Error::InvalidConfig(_)) => 2,
            CliError::Domain(_) => 3,
            CliError::WriteOutput { .. } | CliError::ThreadPool(_) => 1,
        }
    }
}
