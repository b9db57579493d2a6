use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mcss_cli::Cli::parse();
    match mcss_cli::configure_threads(cli.jobs).and_then(|()| mcss_cli::execute(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
