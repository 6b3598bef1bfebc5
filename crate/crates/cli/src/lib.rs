//! Workflows behind the `smcga` command: `simulate`, `optimize` and `compare`.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_compare, cmd_optimize, cmd_simulate, Comparison, Winner};
pub use config::{
    load_config, load_config_with_overrides, parse_config, ConfigError, GainsSource, RunConfig,
};

use smcga_core::ga::GaError;
use smcga_core::sim::SimError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error("optimizer found no admissible gains: {0}")]
    NoValidGains(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 for simulation
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Ga(GaError::InvalidConfig(_)) => 2,
            CliError::Simulation(SimError::InvalidConfig(_) | SimError::Gains(_)) => 2,
            CliError::Simulation(_) => 3,
            CliError::Ga(_) | CliError::NoValidGains(_) | CliError::Io { .. } => 1,
        }
    }
}
