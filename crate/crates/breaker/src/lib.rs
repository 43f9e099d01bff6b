//! File formats and command-line driver for the `breaker-core` recommender:
//! dataset directories, checkpoints, epoch logs, evaluation reports and the
//! `breaker` binary's subcommands.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;

pub use error::{Error, Result};
