//! Configuration, output formats and dispatch behind the `wdch` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod output;
pub mod run;

pub use config::{emit, parse_config, ConfigError, RunConfig};
pub use run::{exit_code, run, sweep, RunError, RunResult};
