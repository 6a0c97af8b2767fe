//! `gport`: solve, tabulate and verify application portfolios.
//!
//! Exit status is 0 on success, 1 when `verify` finds a violated property
//! and 2 on any error. `SOLVER_THREADS` caps the worker pool.

// `!(a < b)` is deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use gport_core::exec::init_thread_pool;

use crate::cli::Cli;
use crate::settings::{FileConfig, Settings};

const THREADS_VAR: &str = "SOLVER_THREADS";

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    if threads == 0 {
        anyhow::bail!("{THREADS_VAR} must be positive");
    }
    init_thread_pool(threads);
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(&cli.global, &file)?;
    let outcome = commands::run(&cli.command, &settings)?;
    let mut params = settings.parameters();
    params.extend(outcome.params);
    let text = outcome.table.render(settings.format);
    output::emit(
        &text,
        cli.global.out.as_deref(),
        commands::command_name(&cli.command),
        params,
    )?;
    Ok(!outcome.violated)
}

fn report(err: &anyhow::Error) {
    eprintln!("error: {err:#}");
    if let Some(gport_core::Error::SolverFailure { grid, .. }) =
        err.downcast_ref::<gport_core::Error>()
    {
        if !grid.is_empty() {
            eprintln!("bracket scan (t, x_0(t) - 1):");
            for (t, miss) in grid {
                eprintln!("  {t:.9e}  {miss:.9e}");
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report(&e);
            ExitCode::from(2)
        }
    }
}
