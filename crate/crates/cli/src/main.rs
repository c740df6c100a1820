//! `qtele`: command-line front end for qudit teleportation.
//!
//! Exit codes: 0 success, 1 a check failed (report still written),
//! 2 usage or input error.

mod args;
mod commands;
mod report;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, Format};

fn run(cli: Cli) -> Result<ExitCode> {
    let threads = cli.output.threads;
    if let Command::ExportProtocol { state } = &cli.command {
        let (text, warnings) = commands::export_protocol(state)?;
        warnings.iter().for_each(|w| eprintln!("warning: {w}"));
        emit(&cli, &text)?;
        return Ok(ExitCode::SUCCESS);
    }

    let mut report = match &cli.command {
        Command::Bound(state) => commands::bound(state)?,
        Command::Simulate { state, mc } => commands::simulate(state, mc, threads)?,
        Command::Sweep {
            theta_min,
            theta_max,
            steps,
        } => commands::sweep(*theta_min, *theta_max, *steps)?,
        Command::VerifyMkl { d, mc, sigmas } => commands::verify_mkl(*d, mc, *sigmas, threads)?,
        Command::CheckProtocol { source, state, tol } => {
            commands::check_protocol(source, state, *tol)?
        }
        Command::Search {
            state,
            iters,
            outcomes,
            seed,
        } => commands::search(state, *iters, *outcomes, *seed)?,
        Command::Estimate { state, mc } => commands::estimate(state, mc, threads)?,
        Command::ExportProtocol { .. } => unreachable!("handled above"),
    };

    let format = cli.output.format.unwrap_or(match cli.command {
        Command::Sweep { .. } => Format::Csv,
        _ => Format::Json,
    });
    report.config("format", serde_json::to_value(format)?);
    if format == Format::Csv {
        report
            .warnings
            .iter()
            .for_each(|w| eprintln!("warning: {w}"));
    }
    emit(&cli, &report.render(format))?;

    Ok(match report.pass {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
