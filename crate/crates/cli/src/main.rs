//! `beamcal`: corpus preparation, training, decoding, scoring, calibration
//! analyses and experiment sweeps from one binary.

mod args;
mod commands;
mod run;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            run::report_error("usage", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let command = cli.command.name();
    let start = Instant::now();
    match commands::invoke(cli, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            run::report_error(command, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
