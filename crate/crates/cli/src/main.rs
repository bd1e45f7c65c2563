use std::process::ExitCode;

use clap::Parser;

use memkin_cli::{error_category, exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let category = error_category(&err);
            eprintln!("error[{category}]: {err:#}");
            ExitCode::from(exit_code(category))
        }
    }
}
