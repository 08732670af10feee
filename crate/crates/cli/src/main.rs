//! `ness`: batch analyses of two-temperature steady states driven by a JSON config.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ness", version, about = "Stability analysis of two-temperature free-fermion steady states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Io {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model assumptions and write validation.json.
    Validate(Io),
    /// Occupation profile and probe covariance of the steady state.
    Ness(Io),
    /// Cesàro means on a finite lattice against the steady state.
    Dynamics(Io),
    /// Level-shift operators, kernels and gaps for every eigenvalue of L_S.
    Levelshift(Io),
    /// Gap scaling in Δβ and the λ₁ threshold exponents.
    Gapscan(Io),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NESS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("NESS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<commands::Completion, CliError> {
    configure_threads()?;
    let (io, handler): (&Io, fn(&ExperimentConfig, &str, &std::path::Path) -> Result<commands::Completion, CliError>) =
        match &cli.command {
            Command::Validate(io) => (io, commands::validate_cmd),
            Command::Ness(io) => (io, commands::ness_cmd),
            Command::Dynamics(io) => (io, commands::dynamics_cmd),
            Command::Levelshift(io) => (io, commands::levelshift_cmd),
            Command::Gapscan(io) => (io, commands::gapscan_cmd),
        };
    let bytes = std::fs::read(&io.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", io.config.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Usage("config is not UTF-8".into()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    handler(&cfg, &output::sha256_hex(&bytes), &io.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(done) => {
            println!("{}", done.summary);
            ExitCode::from(done.exit_code as u8)
        }
        Err(e) => {
            eprintln!("ness: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
