//! Command-line front end: configuration parsing, single runs and parameter
//! sweeps with CSV and PGM output.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{parse_config, parse_config_str, Config, Quantity, RunConfig, SweepConfig};
pub use run::{run_single, solve_pair, RunOutcome};
pub use sweep::{run_sweep, SweepOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// `line` is 0 when the problem is not tied to a line.
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Numerical(#[from] polaron_nm::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
