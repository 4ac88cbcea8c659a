//! Experiment driver around `fockdu-core`: parameter files, run directories,
//! CSV/JSON/SVG outputs and the five subcommands.

pub mod angle;
pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod params;
pub mod plot;

pub use error::{exit, CliError, CliResult};
