//! `ocbsim`: command-line frontend for the cavity-cooling simulator.
//!
//! Subcommands: `cool` (one protocol run), `sweep` (parameter grid),
//! `wigner` (phase-space evaluation), `analytic` (closed-form oracles).
//! Exit codes: 0 success, 2 invalid arguments, 3 simulation error.

mod args;
mod commands;
mod config_file;
mod manifest;

use clap::Parser;

/// Command failures split by exit code.
pub enum Failure {
    /// Bad arguments or config input: exit 2.
    Usage(String),
    /// The simulation itself failed: exit 3, message names the invariant.
    Run(String),
}

impl From<ocbsim::SimError> for Failure {
    fn from(err: ocbsim::SimError) -> Self {
        match err {
            ocbsim::SimError::OffGrid { .. } => Failure::Usage(err.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Run(format!("i/o error: {err}"))
    }
}

fn main() {
    let cli = args::Cli::parse();
    let code = match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    std::process::exit(code);
}
