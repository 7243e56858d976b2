//! File formats, config handling and command implementations for the
//! `basso` binary.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
