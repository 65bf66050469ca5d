//! Command-line driver: screen generation, sensing, reconstruction,
//! Monte-Carlo experiments, structure-function validation and benchmarks.

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod formats;

pub use args::Cli;
pub use commands::run;
pub use error::{exit_code, ValidationError};
