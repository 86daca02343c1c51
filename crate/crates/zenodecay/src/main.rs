//! Experiment runner CLI: one subcommand per experiment, reproducible by
//! seed, emitting CSV data, fit summaries, and SVG plots plus a manifest
//! with content digests.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use zenodecay::experiments::{parse_config, run_experiment, ExperimentKind, RunManifest};
use zenodecay::{Error, Result};

const EXIT_HELP: &str = "\
Exit status:
  0  success
  2  config error (parse failure, unknown key, precondition violation)
  3  numerical validation error
  4  i/o error
  5  fit non-convergence";

#[derive(Parser)]
#[command(
    name = "zenodecay",
    version,
    about = "Decay as the continuous limit of repeated internal projective measurements",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (key = value lines under an [experiment] header)
    #[arg(long)]
    config: PathBuf,
    /// Override the seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's output_dir; default `out`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Commuting state and observable: the constant-1 survival branch
    Qze(RunArgs),
    /// Compound survival against the exponential limit across a ladder of N
    Compound(RunArgs),
    /// Monte Carlo trajectory ensemble with an exponential fit
    Ensemble(RunArgs),
    /// Golden-rule formula rate against the exact-dynamics fit
    Fgr(RunArgs),
    /// Per-channel rates, additivity, and the two-channel survival product
    Channels(RunArgs),
    /// Continuum populations at one time with a Lorentzian fit
    Lineshape(RunArgs),
    /// Exact survival vs exponential vs short-time quadratic on one grid
    Contrast(RunArgs),
}

fn main() {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Qze(a) => (ExperimentKind::Qze, a),
        Command::Compound(a) => (ExperimentKind::Compound, a),
        Command::Ensemble(a) => (ExperimentKind::Ensemble, a),
        Command::Fgr(a) => (ExperimentKind::Fgr, a),
        Command::Channels(a) => (ExperimentKind::Channels, a),
        Command::Lineshape(a) => (ExperimentKind::Lineshape, a),
        Command::Contrast(a) => (ExperimentKind::Contrast, a),
    };
    match run(kind, &args) {
        Ok(manifest) => {
            println!(
                "{}: {} artifact(s), {:.2}s",
                manifest.experiment,
                manifest.artifacts.len(),
                manifest.duration_seconds
            );
            for record in &manifest.artifacts {
                println!("  {}  {}", record.sha256, record.file);
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<RunManifest> {
    let text = std::fs::read_to_string(&args.config)?;
    let config = parse_config(&text)?;
    if config.experiment != kind {
        return Err(Error::InvalidInput(format!(
            "config declares experiment `{}` but the `{}` subcommand was invoked",
            config.experiment.name(),
            kind.name()
        )));
    }
    let config = config.with_overrides(args.seed, args.out.clone());
    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    run_experiment(&config, &out_dir)
}
