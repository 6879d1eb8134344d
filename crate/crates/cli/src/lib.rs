//! Configuration-driven experiment runner for the `slowfast` toolkit.
//!
//! [`config`] turns a TOML file into a validated [`ExperimentConfig`];
//! [`run`] executes one subcommand and writes CSV results plus a JSON
//! manifest.

pub mod config;
pub mod run;

pub use config::{validate_config, ConfigErrors, ExperimentConfig, FieldError, Overrides};
pub use run::{run_experiment, Check, ExitStatus, Manifest, RunError, RunOutcome, Subcommand};
