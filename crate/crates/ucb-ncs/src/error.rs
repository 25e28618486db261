use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] ucb_ncs_core::Error),
    #[error("invalid config value for `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("horizon list must be strictly ascending without duplicates (got {0} after {1})")]
    HorizonOrder(u64, u64),
    #[error("{what} needs at least {min} runs, got {got}")]
    TooFewRuns {
        what: &'static str,
        min: usize,
        got: usize,
    },
}

impl HarnessError {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        HarnessError::InvalidConfig {
            key,
            reason: reason.into(),
        }
    }
}
