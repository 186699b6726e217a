//! `steklov-lab`: runs one experiment per invocation and writes its
//! artifacts, the resolved configuration and a checksummed manifest.
//!
//! Exit codes: 0 on success, 2 on a violated precondition (bad config,
//! invalid input, I/O), 3 on a numerical failure.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, Format};
use output::OutputDir;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] steklov_core::Error),
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(
    steklov_core::modelgeo::ModelError,
    steklov_core::tracelab::TraceError,
    steklov_core::anosovgeo::GeoError,
    steklov_core::recover::RecoverError
);

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "steklov-lab", version, about = "Steklov spectra, wave traces and geodesic tomography experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. `model.kmax=50`. Repeatable.
    #[arg(long = "set", value_name = "K=V", global = true)]
    set: Vec<String>,
    /// Seed of the experiment's random generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact formats to write. Repeatable; defaults to csv and json.
    #[arg(long, value_enum, global = true)]
    format: Vec<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Steklov spectrum of a model domain.
    Spectrum,
    /// Boundary volume from the eigenvalue counting function.
    Weyl,
    /// Mollified (or difference) wave trace and its peaks.
    Trace,
    /// Closed geodesic classes of the default genus-2 surface.
    Geodesics,
    /// Geodesic X-ray design matrix and a seeded round trip.
    Xray,
    /// Order-by-order recovery of a planted jet difference.
    Recover,
    /// Dense return-operator experiment on the circle.
    Oplab,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Weyl => "weyl",
            Command::Trace => "trace",
            Command::Geodesics => "geodesics",
            Command::Xray => "xray",
            Command::Recover => "recover",
            Command::Oplab => "oplab",
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("STEKLOV_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("STEKLOV_LAB_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let text = match &cli.config {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let mut cfg = ExperimentConfig::resolve(text.as_deref(), &cli.set)?;
    let name = cli.command.name();
    match &cfg.command {
        Some(c) if c != name => {
            return Err(CliError::Config(format!("config is for {c:?}, not {name:?}")));
        }
        _ => cfg.command = Some(name.to_string()),
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !cli.format.is_empty() {
        cfg.formats = cli.format;
    }
    let mut out = OutputDir::create(&cfg.out)?;
    let summary = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Weyl => commands::weyl(&cfg, &mut out),
        Command::Trace => commands::trace(&cfg, &mut out),
        Command::Geodesics => commands::geodesics(&cfg, &mut out),
        Command::Xray => commands::xray(&cfg, &mut out),
        Command::Recover => commands::recover(&cfg, &mut out),
        Command::Oplab => commands::oplab(&cfg, &mut out),
    }?;
    let artifacts = out.finish(name, &cfg)?;
    println!("{summary}");
    println!(
        "wrote {} artifacts and manifest.json to {}",
        artifacts.len(),
        cfg.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("steklov-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
