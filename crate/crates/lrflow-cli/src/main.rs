use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lrflow_cli::{run, CliError, Command, RunConfig};

/// Numerical laboratory for the long-range O(n) renormalisation group flow.
///
/// Thread count follows RAYON_NUM_THREADS; outputs do not depend on it.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// `key = value` configuration file.
    config: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io { path: args.config.display().to_string(), source: e })
        .and_then(|text| RunConfig::parse(&text))
        .and_then(|cfg| run(args.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lrflow {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
