//! Command-line front end: feature extraction, training, evaluation, lever
//! filtering, synthetic data and report rendering.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;

use args::{Cli, Command};
use commands::Failure;

fn run(argv: Vec<String>) -> Result<(), Failure> {
    let argv = config::expand(argv).map_err(Failure::Usage)?;
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(Failure::Usage(String::new())) } else { Ok(()) };
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }

    match &cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Drawbar(a) => commands::drawbar(a),
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message().is_empty() {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
