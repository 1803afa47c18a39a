//! File formats and the command-line driver for `mobius-energy-core`.
//!
//! Shapes are JSON: curves `{"n", "points"}`, meshes `{"n", "domain",
//! "image", "faces"}` and annuli `{"n", "points", "faces", "loops"}`. Trial
//! and trajectory logs are CSV. See [`format`] for number formatting.

pub mod commands;
pub mod error;
pub mod format;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::Cli;
pub use error::{CliError, CliResult};

/// Exit status for an unknown subcommand.
pub const EXIT_USAGE: i32 = 64;
/// Exit status for parameter, precondition and input errors.
pub const EXIT_ERROR: i32 = 2;

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    EXIT_USAGE
                }
                _ => {
                    let text = e.to_string();
                    let message: Vec<&str> = text
                        .lines()
                        .take_while(|l| {
                            !l.starts_with("Usage:") && !l.starts_with("For more information")
                        })
                        .map(|l| l.trim().trim_start_matches("error: "))
                        .filter(|l| !l.is_empty())
                        .collect();
                    eprintln!("{}", CliError::Usage(message.join(" ")).diagnostic());
                    EXIT_ERROR
                }
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            EXIT_ERROR
        }
    }
}

/// Runs a parsed command, inside a dedicated pool when `--threads` is set.
pub fn execute(cli: &Cli) -> CliResult<()> {
    match cli.threads {
        None => commands::dispatch(cli),
        Some(0) => Err(CliError::Parameter("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Parameter(format!("thread pool: {e}")))?;
            pool.install(|| commands::dispatch(cli))
        }
    }
}
