//! Command-line front end for the editforge pipeline and the listening-study
//! server. `main.rs` only forwards to [`run`].

pub mod backends;
pub mod commands;
pub mod config;
pub mod server;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use commands::Cli;
use editforge_core::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad flags, missing inputs, invalid configuration.
    pub const USAGE: i32 = 2;
    /// A model or service failed.
    pub const BACKEND: i32 = 3;
    /// Corrupt, inconsistent or insufficient data.
    pub const DATA: i32 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    /// A batch in which every item failed at a backend.
    TotalFailure(String),
    /// A check that ran to completion and found problems.
    DataCheck(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::TotalFailure(m) => write!(f, "every item failed: {m}"),
            CliError::DataCheck(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::TotalFailure(_) => exit::BACKEND,
            CliError::DataCheck(_) => exit::DATA,
            CliError::Core(e) => match e {
                Error::Config(_) => exit::USAGE,
                e if e.is_backend() => exit::BACKEND,
                _ => exit::DATA,
            },
        }
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match commands::execute(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
