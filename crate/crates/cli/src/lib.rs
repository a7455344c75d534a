//! The `chromapart` command-line tool.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 validation or
//! size failure. Messages go to standard error.

pub mod commands;
pub mod config;
pub mod error;
pub mod pnm;
pub mod text;

use std::ffi::OsString;

use clap::Parser;

pub use config::RunConfig;
pub use error::CliError;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(config) => config,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::run(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
