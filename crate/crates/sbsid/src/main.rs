use std::process::ExitCode;

use clap::Parser;
use sbsid::cli::{run, Cli, ERROR_CODE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_CODE)
        }
    }
}
