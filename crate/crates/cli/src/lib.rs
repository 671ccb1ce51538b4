//! Batch driver: config parsing, subcommands, CSV and SVG output.

pub mod commands;
pub mod config;
pub mod plot;

pub use commands::{run, CliError, Outcome};
pub use config::{parse_config, Command, ConfigError, RunConfig};
