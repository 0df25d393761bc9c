mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(a) => {
            let outcome = commands::cmd_analyze(&a)?;
            for miss in &outcome.mock_misses {
                eprintln!("warning: no mock response for request {miss}; served a placeholder");
            }
            println!(
                "wrote {} (report.md, report.json, trend.svg); {} new store record(s)",
                outcome.session_dir.display(),
                outcome.records_written
            );
        }
        Command::Metrics(a) => print!("{}", commands::cmd_metrics(&a)?),
        Command::Simulate(a) => {
            for p in commands::cmd_simulate(&a)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Report(a) => {
            let dir = commands::cmd_report(&a)?;
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
