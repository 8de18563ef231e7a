mod args;
mod commands;
mod config;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Failure classes that map to distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Infeasible(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

const EXIT_PARSE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Parse(_) => EXIT_PARSE,
                Failure::Infeasible(_) => EXIT_INFEASIBLE,
            };
        }
        if let Some(e) = cause.downcast_ref::<hpricing::Error>() {
            return match e {
                hpricing::Error::Lp(_) => EXIT_INFEASIBLE,
                _ => EXIT_DOMAIN,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<toml::de::Error>() {
            return EXIT_PARSE;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
