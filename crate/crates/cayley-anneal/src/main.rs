//! Thin command-line front end over [`cayley_anneal::runner`].
//!
//! Picks a configuration (a reference preset, a TOML file, or the built-in
//! defaults), applies the seed/mode overrides, and dispatches one task. On
//! failure it emits a one-line machine-readable JSON error record on stderr
//! and exits non-zero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cayley_anneal::config::{ExperimentConfig, RunMode};
use cayley_anneal::error::{Error, Result};
use cayley_anneal::runner::{self, Task};

#[derive(Parser)]
#[command(
    name = "cayley-anneal",
    version,
    about = "Quantum annealing of Ising spins on Cayley-tree Rydberg arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; unset fields use the defaults.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Reference operating point (1 = G10, 2 = G22, 3-5 = G14 dual-center).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=5))]
    preset: Option<u8>,

    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Rayon worker count; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Interaction model override.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Nearest-neighbor couplings, all exactly U.
    Ideal,
    /// Full C6/r^6 tails of the realized geometry.
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Realize the array geometry and validate its spacing rules.
    Geometry,
    /// Classify classical ground states over the configured (U, Δ) grid.
    PhaseDiagram,
    /// Closed-system anneal with time-resolved observables (JSONL).
    Anneal,
    /// Draw bitstring shots, with SPAM when enabled, from the end of a run.
    Sample,
    /// Néel-order time series; open-system when noise is configured.
    Neel,
    /// Optimize a weighted-GS hologram for the array's tweezer pattern.
    Holo,
}

impl Command {
    fn task(&self) -> Task {
        match self {
            Command::Geometry => Task::Geometry,
            Command::PhaseDiagram => Task::PhaseDiagram,
            Command::Anneal => Task::Anneal,
            Command::Sample => Task::Sample,
            Command::Neel => Task::Neel,
            Command::Holo => Task::Holo,
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(index)) => ExperimentConfig::preset(index as usize)?,
        (None, None) => ExperimentConfig::default(),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.run.mode = match mode {
            ModeArg::Ideal => RunMode::Ideal,
            ModeArg::Full => RunMode::Full,
        };
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    runner::run_with_threads(cli.command.task(), &cfg, &cli.out, cli.threads)
}

fn report_error(e: &Error) {
    let record = serde_json::json!({
        "error": { "kind": e.kind(), "message": e.to_string() }
    });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report_error(&e);
            ExitCode::FAILURE
        }
    }
}
