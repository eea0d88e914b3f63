use std::collections::BTreeMap;
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    characteristic_similarity, epochs_to_plateau, epochs_to_threshold, mean_std,
    relation_similarity,
};
use crate::embedding::{EmbeddingConfig, EmbeddingMode, WalkConfig};
use crate::error::{Error, Result};
use crate::graph::{
    build_sfor_edges, sample_subnetwork, DeviceRecord, FeatureEncoding, OwnerSocialNetwork,
    SampleFilter, ServiceRequest, SocialGraph,
};
use crate::lookup::{PipelineSettings, PipelineState};

/// Training setup for one mode of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSettings {
    pub mode: EmbeddingMode,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub embed: EmbeddingConfig,
}

impl ModeSettings {
    pub fn new(mode: EmbeddingMode) -> Self {
        Self {
            mode,
            walk: WalkConfig::default(),
            embed: EmbeddingConfig {
                mode,
                ..Default::default()
            },
        }
    }
}

/// Monte Carlo protocol. Seeds inside `modes` are ignored; every trial derives
/// its own from `master_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub sample_size: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub filter: SampleFilter,
    /// Cluster count; `None` uses the `round(sqrt(n / 2))` heuristic.
    pub k: Option<usize>,
    pub kmeans_max_iterations: usize,
    pub kmeans_tolerance: f64,
    pub lambda: f64,
    /// Requests per trial and mode; they share one (augmented) training run.
    pub queries_per_trial: usize,
    pub accuracy_threshold: f64,
    /// An epoch has plateaued once accuracy reaches this fraction of the
    /// run's plateau level (mean accuracy over its last quarter of epochs).
    pub plateau_fraction: f64,
    pub modes: Vec<ModeSettings>,
    /// Trials run in parallel on this many threads (0 = all cores); each
    /// trial trains single-threaded, so results do not depend on it.
    pub threads: usize,
    /// Wall-clock timings make reports non-reproducible, so they are opt-in.
    pub record_timings: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            sample_size: 933,
            trials: 500,
            master_seed: 0,
            filter: SampleFilter::default(),
            k: None,
            kmeans_max_iterations: 300,
            kmeans_tolerance: 1e-6,
            lambda: 1.0,
            queries_per_trial: 1,
            accuracy_threshold: 0.95,
            plateau_fraction: 0.95,
            modes: EmbeddingMode::ALL.map(ModeSettings::new).to_vec(),
            threads: 1,
            record_timings: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.sample_size < 2 {
            return bad("sample size must be at least 2");
        }
        if self.trials == 0 || self.queries_per_trial == 0 {
            return bad("trials and queries per trial must be positive");
        }
        if self.modes.is_empty() {
            return bad("at least one mode must be evaluated");
        }
        if self.k == Some(0) {
            return bad("k must be at least 1");
        }
        for m in &self.modes {
            m.walk.validate()?;
            m.embed.validate()?;
        }
        Ok(())
    }
}

/// Metrics of one mode in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub trial_seed: u64,
    pub mode: EmbeddingMode,
    /// `None` when the threshold was never reached.
    pub epochs_to_95: Option<usize>,
    pub epochs_to_plateau: Option<usize>,
    pub accuracy_at_epochs: BTreeMap<usize, f64>,
    pub final_accuracy: Option<f64>,
    /// Means over the trial's successful queries; `None` if all failed.
    pub candidate_count: Option<f64>,
    pub relation_similarity_pct: Option<f64>,
    pub characteristic_similarity_pct: Option<f64>,
    pub queries: usize,
    pub failed_queries: usize,
    pub failures: Vec<String>,
    pub wall_time: Option<f64>,
}

impl TrialReport {
    pub fn succeeded(&self) -> bool {
        self.candidate_count.is_some()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "candidate_count" => self.candidate_count,
            "relation_similarity_pct" => self.relation_similarity_pct,
            "characteristic_similarity_pct" => self.characteristic_similarity_pct,
            "epochs_to_95" => self.epochs_to_95.map(|e| e as f64),
            "epochs_to_plateau" => self.epochs_to_plateau.map(|e| e as f64),
            "final_accuracy" => self.final_accuracy,
            _ => None,
        }
    }

    fn failed(
        trial: usize,
        trial_seed: u64,
        mode: EmbeddingMode,
        queries: usize,
        reason: String,
    ) -> Self {
        Self {
            trial,
            trial_seed,
            mode,
            epochs_to_95: None,
            epochs_to_plateau: None,
            accuracy_at_epochs: BTreeMap::new(),
            final_accuracy: None,
            candidate_count: None,
            relation_similarity_pct: None,
            characteristic_similarity_pct: None,
            queries,
            failed_queries: queries,
            failures: vec![reason],
            wall_time: None,
        }
    }
}

pub const METRICS: [&str; 6] = [
    "candidate_count",
    "relation_similarity_pct",
    "characteristic_similarity_pct",
    "epochs_to_95",
    "epochs_to_plateau",
    "final_accuracy",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Trials that produced a value for this metric.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: EmbeddingMode,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub metrics: Vec<MetricSummary>,
}

impl ModeSummary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub trials: usize,
    pub config: ProtocolConfig,
    pub modes: Vec<ModeSummary>,
    pub trial_reports: Vec<TrialReport>,
}

impl AggregateReport {
    pub fn mode(&self, mode: EmbeddingMode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Seed of trial `index`; depends on nothing else.
pub fn trial_seed(master_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// A request from a uniformly drawn member with uniformly drawn categories.
pub fn random_request<R: Rng>(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    rng: &mut R,
) -> Result<ServiceRequest> {
    let requester = graph.id_at(rng.random_range(0..graph.node_count()));
    let mut features = vec![0.0; encoding.width()];
    for b in 0..encoding.attribute_count() {
        let block = encoding.block(b);
        features[block.start + rng.random_range(0..block.len())] = 1.0;
    }
    ServiceRequest::new(graph, encoding, requester, features)
}

struct TrialInputs {
    graph: SocialGraph,
    encoding: FeatureEncoding,
    requests: Vec<ServiceRequest>,
    walk_seed: u64,
    embed_seed: u64,
    kmeans_seed: u64,
}

fn prepare_trial(
    catalog: &[DeviceRecord],
    owners: &OwnerSocialNetwork,
    config: &ProtocolConfig,
    seed: u64,
) -> Result<TrialInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sample, sample_owners) = sample_subnetwork(
        catalog,
        owners,
        config.sample_size,
        config.filter,
        rng.next_u64(),
    )?;
    let graph = build_sfor_edges(&sample, &sample_owners)?;
    let encoding = FeatureEncoding::encode(&sample)?;
    let requests = (0..config.queries_per_trial)
        .map(|_| random_request(&graph, &encoding, &mut rng))
        .collect::<Result<_>>()?;
    Ok(TrialInputs {
        graph,
        encoding,
        requests,
        walk_seed: rng.next_u64(),
        embed_seed: rng.next_u64(),
        kmeans_seed: rng.next_u64(),
    })
}

fn run_mode(
    inputs: &TrialInputs,
    settings: &ModeSettings,
    config: &ProtocolConfig,
    trial: usize,
    seed: u64,
) -> TrialReport {
    let started = Instant::now();
    let queries = inputs.requests.len();
    let pipeline = PipelineSettings {
        walk: WalkConfig {
            seed: inputs.walk_seed,
            ..settings.walk
        },
        embed: EmbeddingConfig {
            mode: settings.mode,
            seed: inputs.embed_seed,
            threads: 1,
            ..settings.embed
        },
        k: config.k,
        kmeans_max_iterations: config.kmeans_max_iterations,
        kmeans_tolerance: config.kmeans_tolerance,
        kmeans_seed: inputs.kmeans_seed,
        lambda: config.lambda,
    };
    let state = match PipelineState::build(
        &inputs.graph,
        &inputs.encoding,
        settings.mode,
        &inputs.requests,
        &pipeline,
    ) {
        Ok(s) => s,
        Err(e) => {
            warn!("trial {trial} {}: {e}", settings.mode);
            return TrialReport::failed(trial, seed, settings.mode, queries, e.to_string());
        }
    };

    let mut counts = Vec::new();
    let mut relation = Vec::new();
    let mut characteristic = Vec::new();
    let mut failures = Vec::new();
    for (q, req) in inputs.requests.iter().enumerate() {
        let outcome = state.lookup(q, req).and_then(|r| {
            let ids = r.candidate_ids();
            Ok((
                ids.len() as f64,
                relation_similarity(&inputs.graph, req.requester, &ids)?,
                characteristic_similarity(&inputs.encoding, &req.required_features, &ids)?,
            ))
        });
        match outcome {
            Ok((c, r, ch)) => {
                counts.push(c);
                relation.push(r);
                characteristic.push(ch);
            }
            Err(e) => failures.push(format!("query {q}: {e}")),
        }
    }

    let history = &state.embedding.accuracy_history;
    let mean = |v: &[f64]| mean_std(v).map(|(m, _)| m);
    TrialReport {
        trial,
        trial_seed: seed,
        mode: settings.mode,
        epochs_to_95: epochs_to_threshold(history, config.accuracy_threshold),
        epochs_to_plateau: epochs_to_plateau(history, config.plateau_fraction),
        accuracy_at_epochs: history
            .iter()
            .enumerate()
            .map(|(i, &a)| (i + 1, a))
            .collect(),
        final_accuracy: history.last().copied(),
        candidate_count: mean(&counts),
        relation_similarity_pct: mean(&relation),
        characteristic_similarity_pct: mean(&characteristic),
        queries,
        failed_queries: failures.len(),
        failures,
        wall_time: config
            .record_timings
            .then(|| started.elapsed().as_secs_f64()),
    }
}

fn run_trial(
    catalog: &[DeviceRecord],
    owners: &OwnerSocialNetwork,
    config: &ProtocolConfig,
    trial: usize,
) -> Vec<TrialReport> {
    let seed = trial_seed(config.master_seed, trial);
    match prepare_trial(catalog, owners, config, seed) {
        Ok(inputs) => config
            .modes
            .iter()
            .map(|m| run_mode(&inputs, m, config, trial, seed))
            .collect(),
        Err(e) => config
            .modes
            .iter()
            .map(|m| {
                TrialReport::failed(trial, seed, m.mode, config.queries_per_trial, e.to_string())
            })
            .collect(),
    }
}

/// Summarizes per-trial reports, in mode order of `config.modes`.
pub fn aggregate(config: &ProtocolConfig, reports: Vec<TrialReport>) -> AggregateReport {
    let modes = config
        .modes
        .iter()
        .map(|settings| {
            let mine: Vec<&TrialReport> =
                reports.iter().filter(|r| r.mode == settings.mode).collect();
            let ok = mine.iter().filter(|r| r.succeeded()).count();
            let metrics = METRICS
                .iter()
                .map(|&name| {
                    let values: Vec<f64> = mine.iter().filter_map(|r| r.metric(name)).collect();
                    let stats = mean_std(&values);
                    MetricSummary {
                        metric: name.to_string(),
                        mean: stats.map(|s| s.0),
                        std: stats.map(|s| s.1),
                        trials: values.len(),
                    }
                })
                .collect();
            ModeSummary {
                mode: settings.mode,
                trials_ok: ok,
                trials_failed: mine.len() - ok,
                metrics,
            }
        })
        .collect();
    AggregateReport {
        trials: config.trials,
        config: config.clone(),
        modes,
        trial_reports: reports,
    }
}

/// Runs the full protocol. Errors only on an invalid configuration or a
/// population too small for the sample; failures inside a trial are recorded
/// in its report.
pub fn run_monte_carlo(
    catalog: &[DeviceRecord],
    owners: &OwnerSocialNetwork,
    config: &ProtocolConfig,
) -> Result<AggregateReport> {
    config.validate()?;
    let available = catalog.iter().filter(|d| config.filter.accepts(d)).count();
    if available < config.sample_size {
        return Err(Error::InsufficientPopulation {
            requested: config.sample_size,
            available,
        });
    }
    info!(
        "running {} trials of {} devices over {} modes",
        config.trials,
        config.sample_size,
        config.modes.len()
    );
    let per_trial: Vec<Vec<TrialReport>> = if config.threads == 1 {
        (0..config.trials)
            .map(|t| run_trial(catalog, owners, config, t))
            .collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| {
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_trial(catalog, owners, config, t))
                .collect()
        })
    };
    Ok(aggregate(config, per_trial.into_iter().flatten().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synthesize_catalog, SynthConfig};

    fn tiny_config() -> ProtocolConfig {
        let mut modes = EmbeddingMode::ALL.map(ModeSettings::new).to_vec();
        for m in &mut modes {
            m.embed.dim = 4;
            m.embed.epochs = 2;
            m.walk.walks_per_node = 2;
            m.walk.walk_length = 6;
        }
        ProtocolConfig {
            sample_size: 30,
            trials: 3,
            master_seed: 9,
            k: Some(3),
            modes,
            ..Default::default()
        }
    }

    #[test]
    fn trial_seeds_are_independent_of_count() {
        assert_eq!(trial_seed(5, 3), trial_seed(5, 3));
        assert_ne!(trial_seed(5, 3), trial_seed(5, 4));
        assert_ne!(trial_seed(5, 3), trial_seed(6, 3));
    }

    #[test]
    fn random_requests_are_valid_one_hot() {
        let (catalog, owners) = synthesize_catalog(&SynthConfig {
            n_private: 20,
            n_public: 0,
            n_owners: 5,
            vocab_sizes: [4, 3, 2, 2],
            friendship_prob: 0.3,
            seed: 2,
        })
        .unwrap();
        let g = build_sfor_edges(&catalog, &owners).unwrap();
        let e = FeatureEncoding::encode(&catalog).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let r = random_request(&g, &e, &mut rng).unwrap();
            assert_eq!(r.required_features.iter().sum::<f64>(), 4.0);
        }
    }

    #[test]
    fn population_check_and_failed_trials_are_counted() {
        let (catalog, owners) = synthesize_catalog(&SynthConfig {
            n_private: 10,
            n_public: 0,
            n_owners: 3,
            vocab_sizes: [2, 2, 1, 1],
            friendship_prob: 0.0,
            seed: 0,
        })
        .unwrap();
        let cfg = tiny_config();
        assert!(matches!(
            run_monte_carlo(&catalog, &owners, &cfg),
            Err(Error::InsufficientPopulation { requested: 30, .. })
        ));

        // k larger than the sample makes every trial fail without aborting the run
        let cfg = ProtocolConfig {
            sample_size: 5,
            k: Some(50),
            ..tiny_config()
        };
        let report = run_monte_carlo(&catalog, &owners, &cfg).unwrap();
        assert_eq!(report.trial_reports.len(), 9);
        for m in &report.modes {
            assert_eq!((m.trials_ok, m.trials_failed), (0, 3));
            assert_eq!(m.metric("candidate_count").unwrap().mean, None);
        }
    }

    #[test]
    fn parallel_trials_match_sequential() {
        let (catalog, owners) = synthesize_catalog(&SynthConfig {
            n_private: 80,
            n_public: 5,
            n_owners: 20,
            vocab_sizes: [3, 3, 1, 2],
            friendship_prob: 0.1,
            seed: 3,
        })
        .unwrap();
        let seq = run_monte_carlo(&catalog, &owners, &tiny_config()).unwrap();
        let par = run_monte_carlo(
            &catalog,
            &owners,
            &ProtocolConfig {
                threads: 3,
                ..tiny_config()
            },
        )
        .unwrap();
        assert_eq!(seq.trial_reports, par.trial_reports);
        assert_eq!(seq.modes, par.modes);
    }
}
