//! Command-line front end: each subcommand reads one JSON configuration
//! (from a file or a built-in preset), writes its outputs under `--out`,
//! and exits nonzero with an error JSON on stderr if anything fails,
//! including checks enabled in the configuration.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "qsmear",
    version,
    about = "Convolutions of measures, smeared observables, and phase-space marginals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convolve two scalar measures and report windowed moments.
    Convolve(CommonArgs),
    /// Windowed moments with convergence verdicts for one measure.
    Moments(CommonArgs),
    /// The dyadic construction whose convolution vanishes on even integers.
    Example1(CommonArgs),
    /// Smear a spectral measure and compare both moment-operator routes.
    Smear(CommonArgs),
    /// Build a phase-space observable and check its Cartesian marginals.
    Phasespace(CommonArgs),
    /// Sample outcomes and compare empirical to predicted moments.
    Sample(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Name of a built-in configuration.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "qsmear-out")]
    out: PathBuf,

    /// Override the sampling seed from the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

/// Error carried to the process boundary; printed as one JSON object on
/// stderr.
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: "config",
            message: message.into(),
        }
    }

    pub fn check_failed(message: impl Into<String>) -> Self {
        CliError {
            kind: "check_failed",
            message: message.into(),
        }
    }
}

impl From<qsmear::Error> for CliError {
    fn from(e: qsmear::Error) -> Self {
        let kind = match &e {
            qsmear::Error::NonConvergedMoment { .. } => "non_converged_moment",
            _ => "core",
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            kind: "io",
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError {
            kind: "config",
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Command::Convolve(a) => ("convolve", a),
        Command::Moments(a) => ("moments", a),
        Command::Example1(a) => ("example1", a),
        Command::Smear(a) => ("smear", a),
        Command::Phasespace(a) => ("phasespace", a),
        Command::Sample(a) => ("sample", a),
    };
    match run::dispatch(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.kind, "message": e.message })
            );
            ExitCode::FAILURE
        }
    }
}
