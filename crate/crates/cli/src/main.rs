//! `threshlab`: command-line access to the closed forms, the simulator and
//! the sweeps. Every invocation writes into a fresh run directory under
//! `--out` and leaves a `manifest.json` describing how it was produced.
//!
//! Exit status: 0 on success, 1 on invalid parameters or I/O failure,
//! 2 on usage errors.

mod args;
mod commands;
mod config;
mod error;
mod run_dir;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::config::Resolved;
use crate::error::CliError;
use crate::run_dir::RunDir;

fn execute(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let threads = match cli.common.threads {
        Some(0) => return Err(CliError::Usage("--threads must be >= 1".into())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
            n
        }
        None => rayon::current_num_threads(),
    };
    let resolved = Resolved::from_cli(cli)?;
    log::debug!("resolved configuration:\n{}", resolved.canonical_text());
    let mut dir = RunDir::create(&cli.common.out, cli.common.label.as_deref(), &resolved)?;
    commands::run(&resolved, &mut dir)?;
    let path = dir.finish(&resolved, argv, threads)?;
    log::info!("run directory {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
