//! Configuration, experiment orchestration and field export for `chsolve`.

pub mod config;
pub mod experiment;
pub mod export;

pub use config::{parse_config, ConfigError, Mode, RunConfig, OUTPUT_DIR_ENV};
pub use experiment::{run_experiment, Outcome, RunError, Summary};
