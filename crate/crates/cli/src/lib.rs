//! Command-line front end: Monte-Carlo simulation, parameter solving, bound
//! tables and MMR file utilities. Every command prints one JSON document.

mod args;
mod commands;
mod report;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use args::Cli;
pub use report::{wilson_interval, RunReport};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "LIGHTSYNC_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config files or parameter values. Exit code 1.
    #[error("{0}")]
    Config(String),
    /// A broken internal invariant. Exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

pub(crate) fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parse `argv` (program name first) and run the command.
pub fn run<I, T>(argv: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok(stdout) => Output {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Output {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("{}\n", serde_json::json!({ "error": e.to_string() })),
        },
    }
}
