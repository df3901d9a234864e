//! `paramnet` command-line front end.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Effective Hamiltonian, baths, kept and dropped terms.
    Compile,
    /// Full scattering matrix over the frequency grid.
    Scatter,
    /// Power gain along one path.
    Gain,
    /// Added noise along one path.
    Noise,
    /// Output quadrature variance spectrum.
    Squeeze,
    /// Stability margin of the drift matrix.
    Stability,
    /// Forward and reverse gain and isolation.
    Direction,
    /// Gain-bandwidth table over a sweep.
    Gbw,
    /// Time-domain covariance with counter-rotating terms against the RWA steady state.
    RwaCompare,
    /// Adiabatic elimination of a damped mode.
    Eliminate,
}

#[derive(Debug, Parser)]
#[command(name = "paramnet", version, about = "Linear input-output analysis of parametric networks")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Network description (JSON).
    pub input: PathBuf,

    #[arg(long, allow_hyphen_values = true)]
    pub omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,

    /// Dotted path into the network document (or `cooperativity`) and a comma-separated value list.
    #[arg(long, num_args = 2, value_names = ["PATH", "VALUES"], allow_hyphen_values = true)]
    pub sweep: Option<Vec<String>>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file; `manifest.json` is written next to it. Without it the result goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Input channel, e.g. `d1`, `d2+`, `d1:X`.
    #[arg(long)]
    pub from: Option<String>,
    /// Output channel.
    #[arg(long)]
    pub to: Option<String>,

    /// Mode to eliminate.
    #[arg(long)]
    pub mode: Option<String>,

    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] paramnet::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use paramnet::Error as E;
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Model(e) if e.is_numeric() => 3,
            CliError::Model(E::UnknownChannel(_) | E::MixedBasis(_) | E::StepSize { .. }) => 1,
            CliError::Model(_) => 2,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PARAMNET_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("PARAMNET_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = RunConfig::resolve(cli)?;
    let (body, resolved) = commands::execute(&cfg)?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, &body).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })?;
            manifest::write(&cfg, &resolved, body.as_bytes())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("paramnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
