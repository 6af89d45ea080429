//! Command-line front end: `eval`, `simulate`, `verify` and `scale`.
//!
//! Every command reads a JSON [`config::RunConfig`] and writes CSV, either to
//! stdout or to a file in `--out`. Numbers are printed with 17 significant
//! digits so that output is bit-stable across runs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 accuracy or divergence
//! error, 3 a verification check failed.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Accuracy(_) => 2,
            CliError::VerifyFailed(_) => 3,
        }
    }
}

impl From<taxed_ruin::Error> for CliError {
    fn from(e: taxed_ruin::Error) -> Self {
        use taxed_ruin::Error as E;
        match e {
            E::Accuracy { .. } | E::Divergent { .. } => CliError::Accuracy(e.to_string()),
            E::Domain { .. } | E::Invalid { .. } | E::UnsupportedSmoothness => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "taxed-ruin",
    version,
    about = "Ruin identities for a Lévy risk process with tax paid at running maxima"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for simulation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Quadrature tolerance, overriding `output.tolerance`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Random seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate an identity over a parameter grid.
    Eval,
    /// Estimate functionals by path simulation.
    Simulate,
    /// Run the analytic-versus-oracle checks and write a report.
    Verify,
    /// Tabulate scale functions.
    Scale,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("taxed-ruin: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("--tolerance {t} must be positive")));
        }
    }
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
