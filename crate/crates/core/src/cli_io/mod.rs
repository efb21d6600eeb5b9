//! Run configuration documents, mode dispatch and result files.

pub mod config;
pub mod run;

pub use config::{build_problem, config_hash, parse_config, serialize_config, ConfigError, ConfigIssue, Mode, RunConfig};
pub use run::{exit, run, Overrides, RunError, RunOutcome};
