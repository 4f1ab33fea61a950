mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::Exit;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INVOPT_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // --help and --version are not errors
            return if e.use_stderr() { ExitCode::from(Exit::Input as u8) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
        Command::Generate(a) => commands::generate(a),
        Command::Bench(a) => commands::bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Exit::Input as u8)
        }
    }
}
