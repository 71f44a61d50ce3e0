mod args;
mod error;
mod metrics;
mod negotiate;
mod tools;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{Result, EXIT_OK, EXIT_USAGE};

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Negotiate(a) => negotiate::run(a),
        Command::Solve(a) => tools::solve(a),
        Command::Verbalize(a) => tools::verbalize(a),
        Command::Metrics(a) => metrics::run(a),
        Command::Hofstede(a) => tools::hofstede(a),
        Command::Allocate(a) => tools::allocate(a),
        Command::ExportPairs(a) => tools::export_pairs(a),
        Command::ValidateTopics(a) => tools::validate_topics(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            std::process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
