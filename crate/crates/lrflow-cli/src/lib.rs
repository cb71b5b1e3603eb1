//! Batch front-end for the lrflow library: `lrflow <subcommand> <config>`.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::CliError;
pub use table::Table;
