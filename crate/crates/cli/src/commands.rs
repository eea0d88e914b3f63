use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::Serialize;

use siot_core::cluster::{kmeans_fit, ClusteringResult, KMeansConfig};
use siot_core::embedding::{
    read_embedding, train_embedding, write_embedding, EmbeddingConfig, EmbeddingMode,
    EmbeddingSidecar, WalkConfig,
};
use siot_core::eval::{dimension_sweep, emit_report, emit_sweep, run_monte_carlo, ReportFormat};
use siot_core::graph::{
    build_sfor_edges, ingest_catalog, read_devices, synthesize_catalog, write_devices,
    write_friendships, AttributeValues, DeviceId, DeviceRecord, FeatureEncoding,
    OwnerSocialNetwork, ServiceRequest,
};
use siot_core::lookup::{PipelineSettings, PipelineState};

use crate::config::FileConfig;
use crate::output::OutputDir;
use crate::{
    ClusterArgs, EmbedArgs, EvalArgs, IngestArgs, LookupArgs, SweepArgs, SynthArgs, TrainingArgs,
    UsageError,
};

pub struct Context {
    pub file: FileConfig,
    /// Resolved worker count, never 0.
    pub threads: usize,
}

pub fn init_threads(requested: usize) -> Result<usize> {
    let threads = if requested == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        requested
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| UsageError(format!("cannot start {threads} threads: {e}")))?;
    Ok(threads)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path)
        .map_err(siot_core::Error::from)
        .with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn load_catalog(
    devices: &Path,
    friendships: Option<&Path>,
) -> Result<(Vec<DeviceRecord>, OwnerSocialNetwork)> {
    let catalog = match friendships {
        Some(f) => ingest_catalog(open(devices)?, open(f)?)?,
        None => (read_devices(open(devices)?)?, OwnerSocialNetwork::new()),
    };
    Ok(catalog)
}

fn parse_mode(raw: Option<&str>, fallback: EmbeddingMode) -> Result<EmbeddingMode> {
    match raw {
        Some(s) => s
            .parse()
            .map_err(|e: siot_core::Error| UsageError(e.to_string()).into()),
        None => Ok(fallback),
    }
}

fn apply_training(t: &TrainingArgs, walk: &mut WalkConfig, embed: &mut EmbeddingConfig) {
    if let Some(v) = t.dim {
        embed.dim = v;
    }
    if let Some(v) = t.epochs {
        embed.epochs = v;
    }
    if let Some(v) = t.learning_rate {
        embed.learning_rate = v;
    }
    if let Some(v) = t.negative_samples {
        embed.negative_samples = v;
    }
    if let Some(v) = t.walks_per_node {
        walk.walks_per_node = v;
    }
    if let Some(v) = t.walk_length {
        walk.walk_length = v;
    }
    if let Some(v) = t.window {
        walk.window = v;
    }
    if let Some(v) = t.p {
        walk.return_param_p = v;
    }
    if let Some(v) = t.q {
        walk.inout_param_q = v;
    }
}

pub fn synth(ctx: &Context, a: SynthArgs) -> Result<()> {
    let mut cfg = ctx.file.synth.clone();
    cfg.seed = a.seed;
    if let Some(v) = a.private {
        cfg.n_private = v;
    }
    if let Some(v) = a.public {
        cfg.n_public = v;
    }
    if let Some(v) = a.owners {
        cfg.n_owners = v;
    }
    if let Some(v) = a.vocab {
        cfg.vocab_sizes = v
            .try_into()
            .map_err(|_| UsageError("--vocab takes exactly four sizes".into()))?;
    }
    if let Some(v) = a.friendship_prob {
        cfg.friendship_prob = v;
    }
    let (catalog, owners) = synthesize_catalog(&cfg)?;
    let mut out = OutputDir::create(&a.out)?;
    let mut devices = Vec::new();
    write_devices(&mut devices, &catalog)?;
    out.write("devices.csv", &devices)?;
    let mut friendships = Vec::new();
    write_friendships(&mut friendships, &owners)?;
    out.write("friendships.csv", &friendships)?;
    out.write_json("synth.json", &cfg)?;
    out.finish("synth", Some(a.seed))
}

#[derive(Serialize)]
struct IngestSummary {
    devices: usize,
    private: usize,
    owners: usize,
    friendships: usize,
    edges: usize,
}

pub fn ingest(_ctx: &Context, a: IngestArgs) -> Result<()> {
    let (catalog, owners) = load_catalog(&a.catalog.devices, a.catalog.friendships.as_deref())?;
    let graph = build_sfor_edges(&catalog, &owners)?;
    let summary = IngestSummary {
        devices: catalog.len(),
        private: catalog.iter().filter(|d| d.owner_id.is_some()).count(),
        owners: catalog
            .iter()
            .filter_map(|d| d.owner_id)
            .collect::<std::collections::BTreeSet<_>>()
            .len(),
        friendships: owners.len(),
        edges: graph.edge_count(),
    };
    let mut out = OutputDir::create(&a.out)?;
    out.write("graph.json", graph.to_canonical_json().as_bytes())?;
    out.write_json("summary.json", &summary)?;
    out.finish("ingest", None)
}

pub fn embed(ctx: &Context, a: EmbedArgs) -> Result<()> {
    let (catalog, owners) = load_catalog(&a.catalog.devices, a.catalog.friendships.as_deref())?;
    let graph = build_sfor_edges(&catalog, &owners)?;
    let encoding = FeatureEncoding::encode(&catalog)?;
    let mut walk = ctx.file.walk;
    let mut embed = ctx.file.embed;
    apply_training(&a.training, &mut walk, &mut embed);
    embed.mode = parse_mode(a.mode.as_deref(), embed.mode)?;
    walk.seed = a.seed;
    embed.seed = a.seed;
    embed.threads = ctx.threads;
    let m = train_embedding(&graph, &encoding, &walk, &embed)?;

    let mut out = OutputDir::create(&a.out)?;
    let mut bytes = Vec::new();
    write_embedding(&mut bytes, &m)?;
    out.write("embedding.bin", &bytes)?;
    out.write_json("embedding.json", &EmbeddingSidecar::from(&m))?;
    out.finish("embed", Some(a.seed))
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    node_ids: &'a [DeviceId],
    #[serde(flatten)]
    result: &'a ClusteringResult,
}

pub fn cluster(ctx: &Context, a: ClusterArgs) -> Result<()> {
    let sidecar: EmbeddingSidecar =
        serde_json::from_reader(open(&a.embedding.join("embedding.json"))?)
            .map_err(siot_core::Error::from)?;
    let m = read_embedding(open(&a.embedding.join("embedding.bin"))?, sidecar)?;
    let n = m.vectors.nrows();
    let cfg = KMeansConfig {
        k: a.k
            .or(ctx.file.kmeans.k)
            .unwrap_or_else(|| KMeansConfig::default_k(n)),
        max_iterations: a.max_iterations.unwrap_or(ctx.file.kmeans.max_iterations),
        tolerance: ctx.file.kmeans.tolerance,
        seed: a.seed,
    };
    let result = kmeans_fit(&m.vectors, &cfg)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write_json(
        "clustering.json",
        &ClusterOutput {
            node_ids: &m.node_ids,
            result: &result,
        },
    )?;
    out.finish("cluster", Some(a.seed))
}

pub fn lookup(ctx: &Context, a: LookupArgs) -> Result<()> {
    let (catalog, owners) = load_catalog(&a.catalog.devices, a.catalog.friendships.as_deref())?;
    let graph = build_sfor_edges(&catalog, &owners)?;
    let encoding = FeatureEncoding::encode(&catalog)?;
    let mode = parse_mode(a.mode.as_deref(), ctx.file.embed.mode)?;
    let features = encoding.encode_values(&AttributeValues {
        device_type: a.device_type,
        brand: a.brand,
        mobility: a.mobility,
        power_supply: a.power,
    })?;
    let request = ServiceRequest::new(&graph, &encoding, DeviceId(a.requester), features)?;

    let mut settings = PipelineSettings {
        walk: ctx.file.walk,
        embed: ctx.file.embed,
        k: a.k.or(ctx.file.kmeans.k),
        kmeans_max_iterations: ctx.file.kmeans.max_iterations,
        kmeans_tolerance: ctx.file.kmeans.tolerance,
        kmeans_seed: a.seed,
        lambda: a.lambda.or(ctx.file.lambda).unwrap_or(1.0),
    };
    apply_training(&a.training, &mut settings.walk, &mut settings.embed);
    settings.walk.seed = a.seed;
    settings.embed.seed = a.seed;
    settings.embed.threads = ctx.threads;
    let state = PipelineState::build(
        &graph,
        &encoding,
        mode,
        std::slice::from_ref(&request),
        &settings,
    )?;
    let result = state.lookup(0, &request)?;

    let json = serde_json::to_string_pretty(&result)?;
    println!("{json}");
    if let Some(dir) = &a.out {
        let mut out = OutputDir::create(dir)?;
        out.write_json("lookup.json", &result)?;
        out.finish("lookup", Some(a.seed))?;
    }
    Ok(())
}

pub fn eval(ctx: &Context, a: EvalArgs) -> Result<()> {
    let (catalog, owners) = match &a.devices {
        Some(d) => load_catalog(d, a.friendships.as_deref())?,
        None => synthesize_catalog(&siot_core::graph::SynthConfig {
            seed: a.seed,
            ..ctx.file.synth.clone()
        })?,
    };
    let mut cfg = ctx.file.protocol.clone();
    cfg.master_seed = a.seed;
    cfg.threads = ctx.threads;
    cfg.record_timings |= a.timings;
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.sample {
        cfg.sample_size = v;
    }
    if let Some(v) = a.k {
        cfg.k = Some(v);
    }
    if let Some(v) = a.queries {
        cfg.queries_per_trial = v;
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    for m in &mut cfg.modes {
        apply_training(&a.training, &mut m.walk, &mut m.embed);
    }
    let report = run_monte_carlo(&catalog, &owners, &cfg)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("report.json", &emit_report(&report, ReportFormat::Json)?)?;
    out.write("report.csv", &emit_report(&report, ReportFormat::Csv)?)?;
    out.finish("eval", Some(a.seed))
}

pub fn sweep(ctx: &Context, a: SweepArgs) -> Result<()> {
    if a.dims.is_empty() {
        return Err(UsageError("--dims needs at least one dimension".into()).into());
    }
    if a.dims.contains(&0) {
        return Err(UsageError("dimensions must be positive".into()).into());
    }
    let mut cfg = ctx.file.sweep.clone();
    cfg.seed = a.seed;
    cfg.synth.seed = a.seed;
    cfg.embed.threads = ctx.threads;
    if let Some(v) = a.sample {
        cfg.sample_size = v;
    }
    apply_training(&a.training, &mut cfg.walk, &mut cfg.embed);
    let rows = dimension_sweep(&cfg, &a.dims)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("sweep.csv", &emit_sweep(&rows, ReportFormat::Csv)?)?;
    out.write("sweep.json", &emit_sweep(&rows, ReportFormat::Json)?)?;
    out.finish("sweep", Some(a.seed))
}
