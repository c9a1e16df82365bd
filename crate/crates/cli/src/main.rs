use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use gleason_cli::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT as u8),
            };
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.stdout).expect("values serialize");
            let _ = writeln!(std::io::stdout(), "{text}");
            if outcome.exit_code != 0 {
                eprintln!("gleason: one or more checks failed");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("gleason: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
