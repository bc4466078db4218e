//! `hamdelay`: delay equations from Hamiltonian product towers.
//!
//! Exit codes: 0 success, 1 a finding (violated bound, residual over
//! tolerance, low convergence order), 2 configuration or runtime error.

mod commands;
mod config;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use commands::{Status, VariantArg};
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hamdelay", version, about = "Delay equations from Hamiltonian chords on product towers")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration by name; `--preset list` prints the names.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integrator step 2^-m.
    #[arg(long, global = true, value_name = "m")]
    steps: Option<u32>,
    /// Seeds per parameter dimension.
    #[arg(long, global = true, value_name = "k")]
    grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and render the delay equation system.
    Delaygen,
    /// Enumerate chords and check the count against the configured bounds.
    Chords,
    /// Pull chords back and check them in the delay equation two ways.
    Verify,
    /// Action of loops against their graph chords, with convergence orders.
    Action,
    /// Copy time map of the standard chain.
    Tau {
        #[arg(long)]
        level: usize,
        /// One-based copy index.
        #[arg(long)]
        copy: usize,
        #[arg(long, value_enum, default_value = "both")]
        variant: VariantArg,
    },
    /// Φ^n ∘ Ψ^n against the identity.
    Roundtrip,
}

impl Cli {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = match (&self.config, &self.preset) {
            (Some(p), _) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
            (None, Some(name)) => presets::lookup(name)
                .ok_or_else(|| anyhow!("unknown preset {name:?}; known: {}", presets::names().join(", ")))?
                .to_string(),
            (None, None) => return Err(anyhow!("pass --config PATH or --preset NAME")),
        };
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.steps {
            cfg.integrator.step_exponent = m;
        }
        if let Some(k) = self.grid {
            cfg.grid.points_per_dim = k;
        }
        Ok(cfg)
    }

    fn run(&self) -> Result<Status> {
        if self.preset.as_deref() == Some("list") {
            for n in presets::names() {
                println!("{n}");
            }
            return Ok(Status::Ok);
        }
        let out = self.out.as_deref();
        match &self.command {
            Command::Tau { level, copy, variant } => commands::tau(*level, *copy, *variant),
            Command::Delaygen => commands::delaygen(&self.load()?, out),
            Command::Chords => commands::chords(&self.load()?, out),
            Command::Verify => commands::verify(&self.load()?, out),
            Command::Action => commands::action(&self.load()?, out),
            Command::Roundtrip => commands::roundtrip(&self.load()?, out),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.run() {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Finding) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
