#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{ConfigError, Params};

/// Compressed Toeplitz matrices on radial-weight spaces and their spectra.
#[derive(Parser)]
#[command(name = "szego", version)]
struct Cli {
    /// Config file of `key = value` lines; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Log moments ln c_n and ln c_{2n+1}
    Moments(Params),
    /// Mass of mu_n below r~ and moment ratios
    Measures(Params),
    /// Assemble the matrix of order N
    Matrix(Params),
    /// Eigenvalues of the matrix of order N
    Spectrum(Params),
    /// Normalized trace convergence against the boundary average
    Limit(Params),
    /// Eigenvalue counting in a window against the boundary level measure
    Density(Params),
    /// Density experiment for |z| arg(z) on the Bergman space
    DemoEquidistribution(Params),
    /// Closed-form oracle suite
    Selftest(Params),
}

impl Command {
    fn split(self) -> (&'static str, Params) {
        match self {
            Command::Moments(p) => ("moments", p),
            Command::Measures(p) => ("measures", p),
            Command::Matrix(p) => ("matrix", p),
            Command::Spectrum(p) => ("spectrum", p),
            Command::Limit(p) => ("limit", p),
            Command::Density(p) => ("density", p),
            Command::DemoEquidistribution(p) => ("demo-equidistribution", p),
            Command::Selftest(p) => ("selftest", p),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SZEGO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Config(ConfigError::Invalid(format!(
            "SZEGO_THREADS must be a non-negative integer, got '{raw}'"
        )))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn real_main() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(CliError::Usage("invalid command line".into()));
        }
    };
    init_threads()?;
    let (name, flags) = cli.command.split();
    let params = match &cli.config {
        Some(path) => flags.over(Params::load(path)?),
        None => flags,
    };
    commands::run(name, &params)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
