use std::process::ExitCode;

use chainrelay_cli::{execute, write_output, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|(text, out)| write_output(&text, out.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chainrelay: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
