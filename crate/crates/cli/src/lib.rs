//! Command-line front end for `l1fit`: CSV ingestion, text and JSON output,
//! and the `fit`, `path`, `simulate` and `certify` commands.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod input;
pub mod number;

pub use args::Cli;
pub use commands::run;
pub use document::PathDocument;
pub use error::{CliError, CliResult};
