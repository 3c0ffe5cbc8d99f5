//! File formats, tables, plots and subcommands for the `emitter` binary.

pub mod commands;
pub mod error;
pub mod plot;
pub mod snapfile;
pub mod table;
pub mod twfile;

pub use error::{CliError, Result};
