use std::process::ExitCode;

use clap::Parser;
use dfdbayes::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => {
                eprintln!("error: cannot start {k} threads: {e}");
                return ExitCode::from(1);
            }
        },
        None => run(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
