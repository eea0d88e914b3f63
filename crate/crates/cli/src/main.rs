//! `siot`: synthesize or ingest a device catalog, embed, cluster, look up
//! services and run the Monte Carlo evaluation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use siot_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "siot",
    version,
    about = "Service discovery over social IoT graphs"
)]
struct Cli {
    /// JSON configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores). 1 selects the deterministic trainer.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic device catalog and friendship table.
    Synth(SynthArgs),
    /// Validate a catalog and write its social graph.
    Ingest(IngestArgs),
    /// Train an embedding.
    Embed(EmbedArgs),
    /// Cluster a trained embedding with k-means.
    Cluster(ClusterArgs),
    /// Answer one service request.
    Lookup(LookupArgs),
    /// Run the Monte Carlo evaluation.
    Eval(EvalArgs),
    /// Accuracy versus embedding dimension.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct CatalogArgs {
    /// Device CSV.
    #[arg(long)]
    devices: PathBuf,
    /// Owner friendship CSV; no friendships when omitted.
    #[arg(long)]
    friendships: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TrainingArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Noise samples per pair; 0 trains with the exact softmax.
    #[arg(long)]
    negative_samples: Option<usize>,
    #[arg(long)]
    walks_per_node: Option<usize>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    private: Option<usize>,
    #[arg(long)]
    public: Option<usize>,
    #[arg(long)]
    owners: Option<usize>,
    /// Vocabulary sizes for type, brand, mobility and power supply.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    vocab: Option<Vec<usize>>,
    #[arg(long)]
    friendship_prob: Option<f64>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    /// edges | attributes | full
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Directory written by `embed`.
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LookupArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
    /// edges | attributes | full
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    requester: u64,
    #[arg(long = "type")]
    device_type: String,
    #[arg(long)]
    brand: String,
    #[arg(long)]
    mobility: String,
    #[arg(long)]
    power: String,
    #[arg(long)]
    k: Option<usize>,
    /// Weight of the social term in full mode.
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    seed: u64,
    /// Also write the result under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Catalog to sample from; a synthetic catalog is generated when omitted.
    #[arg(long, requires = "friendships")]
    devices: Option<PathBuf>,
    #[arg(long)]
    friendships: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Record per-trial wall time (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated embedding dimensions.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    dims: Vec<usize>,
    #[arg(long)]
    sample: Option<usize>,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Bad flags or configuration, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::NoCandidates | Error::AllUnreachable { .. }) => 3,
        Some(
            Error::InvalidConfig(_)
            | Error::InsufficientPopulation { .. }
            | Error::TooFewPoints { .. },
        ) => 2,
        _ => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIOT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = config::load(cli.config.as_deref()).and_then(|file| {
        let threads = commands::init_threads(cli.threads)?;
        let ctx = commands::Context { file, threads };
        match cli.command {
            Command::Synth(a) => commands::synth(&ctx, a),
            Command::Ingest(a) => commands::ingest(&ctx, a),
            Command::Embed(a) => commands::embed(&ctx, a),
            Command::Cluster(a) => commands::cluster(&ctx, a),
            Command::Lookup(a) => commands::lookup(&ctx, a),
            Command::Eval(a) => commands::eval(&ctx, a),
            Command::Sweep(a) => commands::sweep(&ctx, a),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
