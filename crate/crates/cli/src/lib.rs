//! Scenario runner behind the `sectorsim` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

use std::fmt;

pub use config::{parse_config, ScenarioConfig};
pub use run::{execute, Artifacts};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SECTORSIM_OUT";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments, config or input data. Exit 2.
    Usage(String),
    /// Capacity, accuracy, convergence or I/O failure. Exit 3.
    Runtime(String),
    /// A check suite reported a failing property. Exit 4.
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sectorsim::Error> for CliError {
    fn from(e: sectorsim::Error) -> Self {
        if e.is_runtime() {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
