//! Command-line front end for `chirpdnp`: JSON configs in, CSV/gnuplot/JSON out.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_str, ConfigError, ExperimentKind, Overrides, RunConfig};
pub use output::{RunManifest, RunStatus};
pub use run::{check, execute, Invocation};
