mod args;
mod commands;
mod error;
mod json;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::{CliError, EXIT_USAGE};

fn run(cli: &Cli) -> error::Result<serde_json::Value> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Dag(q) => commands::dag::run(q),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim_end());
            eprint!("{}", json::render(&json::error_document(&err)));
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(&cli) {
        Ok(doc) => {
            print!("{}", json::render(&doc));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprint!("{}", json::render(&json::error_document(&err)));
            ExitCode::from(err.exit as u8)
        }
    }
}
