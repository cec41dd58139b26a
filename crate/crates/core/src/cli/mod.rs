//! The `clsts` command line.
//!
//! Option values are layered: command-line flags, then the subcommand's table
//! in the `--config` TOML file, then built-in defaults. Results go to stdout,
//! diagnostics to stderr. Exit status is 0 on success, 1 on a runtime error
//! and 2 on a usage error.

mod args;
mod commands;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::{Cli, Command, ConfigFile};

/// Parses `argv` (program name first) and runs the selected subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match commands::dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
