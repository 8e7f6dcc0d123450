use std::process::ExitCode;

use clap::Parser;
use fastctl::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            if let Some(w) = &outcome.warning {
                eprintln!("warning: {w}");
            }
            match outcome.failure {
                Some(msg) => {
                    let e = CliError::Verification(msg);
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
