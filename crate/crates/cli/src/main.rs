use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = beamfair_cli::Cli::parse();
    match beamfair_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
