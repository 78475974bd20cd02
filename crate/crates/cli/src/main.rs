use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = wkforge_cli::cli::Args::parse();
    match wkforge_cli::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
