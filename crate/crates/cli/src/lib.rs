//! `ckdx` command-line driver: dataset summaries, the configuration search,
//! explanation artifacts and report tables.
//!
//! Exit codes: 0 success, 2 usage error (bad flags or argument values such
//! as an out-of-range instance id), 3 input error (unreadable or malformed
//! dataset, config, model or results file, invalid grid), 4 runtime failure
//! (search or explanation failed, output not writable).

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

/// Environment variable naming the CV cache directory. Unset disables caching.
pub const CACHE_DIR_ENV: &str = "CKDX_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}
