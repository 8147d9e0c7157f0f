use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use cellprobe::experiments::{run, write_outputs, ExperimentConfig, ExperimentKind};

/// Seeded experiments on the cell-probe simulator.
#[derive(Parser, Debug)]
#[command(name = "cellprobe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact trace distance between random operation sequences on the
    /// linear-scan dynamization.
    Oblivcheck(Common),
    /// Epoch-counting distinguisher on the bucketed baseline and the oblivious
    /// dynamization.
    Attack(Common),
    /// Measured probe totals of the dynamization against the closed form.
    Dynbench(Common),
    /// Reverse Pinsker, cell-sampling probabilities and pairwise distances.
    Lemmas(Common),
    /// Neighborhood sizes of random vertex sets against the exhaustive minimum.
    Expansion(Common),
    /// Cell sampling and resolved-query replay.
    Resolve(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: Option<u64>,
    /// Result JSON path; CSV side files go next to it. Prints to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Distinguisher threshold on t_i.
    #[arg(long)]
    threshold: Option<u64>,
    /// Smallest epoch size.
    #[arg(long)]
    floor: Option<u64>,
    /// Write the first session's trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Record wall-clock time (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Oblivcheck(c) => (ExperimentKind::Oblivcheck, c),
            Command::Attack(c) => (ExperimentKind::Attack, c),
            Command::Dynbench(c) => (ExperimentKind::Dynbench, c),
            Command::Lemmas(c) => (ExperimentKind::Lemmas, c),
            Command::Expansion(c) => (ExperimentKind::Expansion, c),
            Command::Resolve(c) => (ExperimentKind::Resolve, c),
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let (kind, args) = Cli::parse().command.split();
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path, kind, args.seed)?,
        None => ExperimentConfig::defaults(kind, args.seed),
    };
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(t) = args.threshold {
        config.threshold = Some(t);
    }
    if let Some(f) = args.floor {
        config.epochs.floor_override = Some(f);
    }
    config.timing |= args.timing;
    let output = run(&config).with_context(|| format!("{kind} failed"))?;
    let json = write_outputs(&output, args.out.as_deref(), args.trace_out.as_deref())?;
    if args.out.is_none() {
        print!("{json}");
    }
    Ok(())
}
