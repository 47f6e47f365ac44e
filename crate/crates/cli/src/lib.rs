//! Command-line driver for the quantum money simulator.

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod table;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
