//! `tkgforge` command-line entry point.
//!
//! Exit status: 0 on success, 1 for configuration and usage errors, 2 for
//! data errors (missing or malformed inputs), 3 for text backend failures.

mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use config::PipelineConfig;
use error::{CliError, Result};

fn run(cli: Cli) -> Result<PathBuf> {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let run_dir = cli.run_dir.clone().or(config.run_dir.clone()).unwrap_or_else(|| "run".into());
    std::fs::create_dir_all(&run_dir).map_err(|e| CliError::Config(format!("{}: {e}", run_dir.display())))?;
    let arguments = std::env::args().skip(1).collect();
    let mut ctx = commands::Context::new(cli.command.name(), arguments, config, seed, run_dir);
    commands::run(&cli.command, &mut ctx)?;
    ctx.finish()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(manifest) => {
            log::info!("manifest written to {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tkgforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
