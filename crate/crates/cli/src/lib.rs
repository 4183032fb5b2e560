//! Pipeline stages behind the `kbscore` command.

pub mod config;
mod error;
pub mod files;
pub mod pipeline;

pub use error::{CliError, CliResult, EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE};
