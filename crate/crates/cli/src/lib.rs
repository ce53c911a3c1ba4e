//! The `trajdiff` command line: scene simulation, condition encoding,
//! training, sampling, evaluation and manifest verification.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod scenes;
pub mod settings;
pub mod staging;
pub mod threads;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{Cli, Command};
pub use error::{CliError, Result};

/// Parses `argv` (program name first) and runs the subcommand. Returns the
/// process exit code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
