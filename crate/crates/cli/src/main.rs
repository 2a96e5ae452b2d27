mod args;
mod commands;
mod config;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};

/// Sizes the global rayon pool from `ABDR_THREADS` (unset or 0 = one
/// thread per core).
fn configure_threads() -> Result<()> {
    let threads = match std::env::var("ABDR_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("ABDR_THREADS: expected a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let m = commands::run(&cfg)?;
            println!("{}", serde_json::to_string(&m)?);
        }
        Command::Sweep(args) => commands::sweep(&args)?,
        Command::Gen(args) => commands::gen(&args.resolve()?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
