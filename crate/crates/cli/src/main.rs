//! `poincare`: taxonomy extraction, embedding training, sweeps, evaluation and feature
//! export as reproducible file-to-file pipelines.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use poincare_core::CandidatePolicy;

#[derive(Debug, Parser)]
#[command(
    name = "poincare",
    version,
    about = "Poincaré-ball embeddings of concept taxonomies"
)]
pub struct Cli {
    /// Worker threads; 1 is deterministic, 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record wall-clock time in the run manifest (makes manifests run-dependent).
    #[arg(long, global = true)]
    record_wall_time: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the ancestral subtree covering an observed concept set.
    Extract {
        edge_list: PathBuf,
        observed: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an embedding of every node of an edge list.
    Train {
        edge_list: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and rank one embedding per cell of a hyperparameter grid.
    Sweep {
        edge_list: PathBuf,
        grid: PathBuf,
        /// Base training config; grid axes override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "all")]
        candidate_policy: CandidatePolicy,
    },
    /// Mean rank of an embedding over the edges of a graph.
    Eval {
        edge_list: PathBuf,
        embedding: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "all")]
        candidate_policy: CandidatePolicy,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Log-map every embedding row to the tangent space at the origin.
    ExportTangent {
        embedding: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Per-patient feature files from an embedding and a patient CSV.
    Features {
        embedding: PathBuf,
        patients: PathBuf,
        #[arg(long, value_enum, default_value_t = FeatureMode::Average)]
        mode: FeatureMode,
        /// Average raw ball coordinates instead of tangent vectors.
        #[arg(long)]
        raw_average: bool,
        /// Width of the Euclidean covariate table (defaults: 256 average, 192 sequence).
        #[arg(long)]
        euclidean_dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureMode {
    Average,
    Sequence,
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
