//! File formats and command-line front end for `amcontrast-core`.

pub mod ascii;
pub mod blob;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod ply;
pub mod tables;

pub use error::{CliError, Result};
