//! `dfocus` — saliency-based disease-focus analysis from the command line.
//!
//! Subcommands cover the full pipeline: `saliency` (gradient maps),
//! `dfscore` (per-region medians, ranking, disease-focus reports),
//! `metrics` (classification metric suite), `mi` (mutual-information
//! feature ranking), `phantom` (synthetic test data) and `augment`
//! (volume transforms).
//!
//! Conventions: exit code 0 iff the output was fully produced; reports go
//! to stdout or `--out`; diagnostics go to stderr. JSON reports embed a run
//! manifest (tool version, parameters, input digests); volume outputs get a
//! `<file>.manifest.json` sidecar. With `--no-timestamp`, identical inputs,
//! flags and seeds produce byte-identical outputs.

mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "dfocus",
    version,
    about = "Quantitative disease-focus analysis for 3D brain volumes"
)]
pub struct Cli {
    /// Write the primary output here (reports default to stdout; volume
    /// subcommands require it).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed for the random transforms and generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Omit timestamps from manifests so outputs are byte-reproducible.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Number of top regions or features to report.
    #[arg(long, global = true, default_value_t = 10)]
    pub top_k: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute (or import) a gradient saliency map and write it as NIfTI.
    Saliency(commands::saliency::SaliencyArgs),
    /// Disease-focus reports for a cohort of saliency maps.
    Dfscore(commands::dfscore::DfscoreArgs),
    /// Classification metric suite over a predictions CSV.
    Metrics(commands::metrics::MetricsArgs),
    /// Mutual-information feature ranking with DF scoring.
    Mi(commands::mi::MiArgs),
    /// Generate a synthetic phantom volume, label map and region table.
    Phantom(commands::phantom::PhantomArgs),
    /// Apply augmentation transforms to a volume.
    Augment(commands::augment::AugmentArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = commands::Globals {
        out: cli.out,
        seed: cli.seed,
        timestamp: !cli.no_timestamp,
        top_k: cli.top_k,
    };
    let result = match cli.command {
        Command::Saliency(args) => commands::saliency::run(args, &globals),
        Command::Dfscore(args) => commands::dfscore::run(args, &globals),
        Command::Metrics(args) => commands::metrics::run(args, &globals),
        Command::Mi(args) => commands::mi::run(args, &globals),
        Command::Phantom(args) => commands::phantom::run(args, &globals),
        Command::Augment(args) => commands::augment::run(args, &globals),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
