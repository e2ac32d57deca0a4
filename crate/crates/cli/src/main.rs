use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = podselect::Cli::parse();
    match podselect::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("podselect: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
