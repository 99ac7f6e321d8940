//! Library surface of the experiment runner, exposed for integration tests.

pub mod config;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig};
pub use runner::{cmd_gen_profile, cmd_multi_round, cmd_reference, cmd_single_round, GenProfileArgs, RunOptions, RunnerError};
