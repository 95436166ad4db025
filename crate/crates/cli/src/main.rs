//! `eikon`: solve benchmarks and run the verification checks from the
//! command line.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 configuration
//! error, 3 gate failure.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Why a run did not succeed; each variant maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
    Gate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Gate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Gate(m) => m,
        }
    }
}

impl From<eikon::Error> for Failure {
    fn from(e: eikon::Error) -> Self {
        if e.is_configuration() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("eikon: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
