//! Experiment harness for the learning controller: TOML configuration,
//! multi-seed drivers, CSV/JSON output and the `ucb-ncs` command set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
