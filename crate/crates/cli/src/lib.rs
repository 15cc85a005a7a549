//! Command-line driver: layered configuration, CEP scans with cached
//! correlation tables, Wigner panels and grid validation.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;
pub mod validate;

pub use config::RunConfig;
pub use error::{CliError, Result};
