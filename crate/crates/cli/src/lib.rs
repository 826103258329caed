//! Homodyne records, synthetic sampling, configuration and the sweep
//! pipeline behind the `qbench` binary.

pub mod check;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod records;
pub mod sampler;

pub use error::{CliError, Result};
