//! Configuration and dispatch for the `kicktop` command-line tool.

pub mod config;
pub mod run;

pub use config::{parse_config, Command, ConfigError, RunConfig, OUTPUT_DIR_ENV};
pub use run::{run, RunError, RunOutcome};
