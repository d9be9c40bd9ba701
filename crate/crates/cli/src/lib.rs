//! Config parsing and experiment runs for the `stochhr` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_summary, ConfigError, ErrorKind, RunConfig};
pub use run::{run, Experiment, RunOutcome};
