//! Experiment runner for the `orthospline` library: config handling, report
//! emission and one entry point per subcommand.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, resolve, ConfigError, ExperimentConfig, PartitionSource, RawConfig};
pub use run::{run, CliError, Command, RunOutcome};
