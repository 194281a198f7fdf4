//! Command-line front end: argument parsing, the commands themselves and the
//! file formats they emit.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
