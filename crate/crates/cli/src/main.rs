use std::process::ExitCode;

use clap::Parser;
use nlpid_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nlpid: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
