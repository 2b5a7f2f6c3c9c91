//! Experiment orchestration: INI configuration, ε-sweeps, the check
//! battery and the `homog` command line.

pub mod checks;
pub mod cli;
pub mod config;
pub mod sweep;

pub use checks::{run_checks, CheckOutcome, ChecksReport};
pub use cli::cli_main;
pub use config::ExperimentConfig;
pub use sweep::{run_sweep, RowStatus, SweepReport, SweepRow};
