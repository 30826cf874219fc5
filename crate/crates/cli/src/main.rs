use std::process::ExitCode;

use kicktop_cli::config::parse_config_or_exit;
use kicktop_cli::{run, OUTPUT_DIR_ENV};

fn main() -> ExitCode {
    let config = match parse_config_or_exit(std::env::var_os(OUTPUT_DIR_ENV)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            for path in &outcome.files {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
