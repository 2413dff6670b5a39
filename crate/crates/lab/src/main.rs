use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ertl_lab::cli::Cli;
use ertl_lab::commands;
use ertl_lab::error::LabError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&LabError::usage(e.to_string().trim_end())),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &LabError) -> ExitCode {
    let json = serde_json::to_string(&e.report()).unwrap_or_else(|_| e.to_string());
    eprintln!("{json}");
    ExitCode::from(e.exit_code())
}
