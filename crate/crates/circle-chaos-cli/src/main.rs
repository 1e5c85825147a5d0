//! Batch front end: every run is a deterministic function of the config file and the seed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use circle_chaos::{Error, Result};
use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::{Header, Outputs};

#[derive(Parser)]
#[command(name = "circle-chaos", version, about = "Gaussian multiplicative chaos via circle averages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config value.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replicate count; overrides the config value.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Threshold algebra for one parameter set.
    Thresholds,
    /// Mass ladders and their convergence fit.
    Simulate,
    /// Local dimension of the chaos measure.
    Dimension,
    /// Projection densities along chords.
    Project,
    /// Fourier decay of the chaos measure.
    Fourier,
    /// Hölder exponent of chord masses.
    Holder,
    /// Quantum length of curve prefixes.
    QuantumLength,
    /// Amplitude calibration of the grid backend.
    CalibrateGrid,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Thresholds => "thresholds",
            Command::Simulate => "simulate",
            Command::Dimension => "dimension",
            Command::Project => "project",
            Command::Fourier => "fourier",
            Command::Holder => "holder",
            Command::QuantumLength => "quantum-length",
            Command::CalibrateGrid => "calibrate-grid",
        }
    }
}

fn run(cli: &Cli) -> Result<commands::Outcome> {
    let path = cli.config.as_ref().ok_or_else(|| Error::InvalidInput("--config is required".into()))?;
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidInput(format!("config is not UTF-8: {e}")))?;
    let mut cfg = RunConfig::parse(text)?;
    if let Some(reps) = cli.reps {
        if reps < 1 {
            return Err(Error::InvalidInput("--reps must be at least 1".into()));
        }
        cfg.reps = reps;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("--jobs: {e}")))?;
    }
    let seed = cli
        .seed
        .or(cfg.seed)
        .ok_or_else(|| Error::InvalidInput("a seed is required: pass --seed or set seed in the config".into()))?;
    let out = Outputs::new(&cfg.out, Header::new(cli.command.name(), &bytes, seed))?;
    match cli.command {
        Command::Thresholds => commands::thresholds(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, seed, &out),
        Command::Dimension => commands::dimension(&cfg, seed, &out),
        Command::Project => commands::project(&cfg, seed, &out),
        Command::Fourier => commands::fourier(&cfg, seed, &out),
        Command::Holder => commands::holder(&cfg, seed, &out),
        Command::QuantumLength => commands::quantum_length(&cfg, seed, &out),
        Command::CalibrateGrid => commands::calibrate(&cfg, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}: {}", cli.command.name(), outcome.summary);
            match outcome.pass {
                Some(false) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(if e.is_budget() { 3 } else { 2 })
        }
    }
}
