//! Experiment driver for `floquet-core`: config handling, the subcommands,
//! the acceptance suite and the run manifest.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod suite;

/// Process exit statuses.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const ACCEPTANCE_FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "FLOQUET_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Numerical(#[from] floquet_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Configuration problems are usage errors; everything else stops a
    /// run that was already under way.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => exit::USAGE,
            CliError::Numerical(floquet_core::Error::InvalidParameter { .. }) => exit::USAGE,
            _ => exit::NUMERICAL,
        }
    }
}

/// Size the global rayon pool from [`THREADS_VAR`], if set.
pub fn init_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config {
            field: THREADS_VAR.into(),
            reason: format!("expected a positive integer, got `{raw}`"),
        })?;
    // A second initialization (tests calling in twice) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(Some(n))
}
