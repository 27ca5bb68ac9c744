//! `dyadic-forge`: batch driver for the verification pipelines.
//!
//! Exit codes: 0 verified, 2 bad input or precondition, 3 property
//! violation, 4 missing environment (calibration file, unwritable output).

mod args;
mod cmd;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use output::{EnvFailure, Verdict};

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<dyadic_forge::Error>() {
        return e.exit_code() as u8;
    }
    if err.downcast_ref::<EnvFailure>().is_some() {
        return 4;
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cmd::run(&cli).and_then(|outcome| {
        output::emit(&outcome, &cli.common)?;
        Ok(outcome.verdict)
    });
    match result {
        Ok(Verdict::Verified | Verdict::ReportOnly) => ExitCode::SUCCESS,
        Ok(Verdict::Violated(msg)) => {
            eprintln!("dyadic-forge: property violated: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("dyadic-forge: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
