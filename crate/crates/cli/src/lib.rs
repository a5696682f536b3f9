//! Command-line harness for the NLS laboratory: configuration, experiment
//! modes and the files they write.

pub mod config;
pub mod error;
pub mod modes;
pub mod output;

pub use config::{load_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use modes::{run_experiment, Mode, RunReport};
