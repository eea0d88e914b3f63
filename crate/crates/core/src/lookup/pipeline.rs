use log::debug;
use serde::{Deserialize, Serialize};

use super::{
    lookup_attributes_mode, lookup_edges_mode, lookup_full_mode, LookupContext, LookupMode,
    LookupResult,
};
use crate::cluster::{kmeans_fit, ClusteringResult, KMeansConfig};
use crate::embedding::{train_embedding, EmbeddingConfig, EmbeddingMatrix, WalkConfig};
use crate::error::{Error, Result};
use crate::graph::{inject_fake_device, DeviceId, FeatureEncoding, ServiceRequest, SocialGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub walk: WalkConfig,
    /// `mode` is overwritten by the mode the pipeline is built for.
    pub embed: EmbeddingConfig,
    /// Cluster count; `None` uses the `round(sqrt(n / 2))` heuristic.
    pub k: Option<usize>,
    pub kmeans_max_iterations: usize,
    pub kmeans_tolerance: f64,
    pub kmeans_seed: u64,
    /// Weight of the social term in the full-mode score.
    pub lambda: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            walk: WalkConfig::default(),
            embed: EmbeddingConfig::default(),
            k: None,
            kmeans_max_iterations: 300,
            kmeans_tolerance: 1e-6,
            kmeans_seed: 0,
            lambda: 1.0,
        }
    }
}

/// A trained and clustered network, ready to answer the queries it was
/// built for.
///
/// Attribute-aware modes embed a copy of the network augmented with one fake
/// device per query; the original graph and encoding are kept untouched and
/// used for all distance computations.
#[derive(Debug, Clone)]
pub struct PipelineState {
    pub mode: LookupMode,
    pub graph: SocialGraph,
    pub encoding: FeatureEncoding,
    pub embedding: EmbeddingMatrix,
    pub clustering: ClusteringResult,
    /// Fake device for each query, aligned with the requests given to `build`.
    pub fakes: Vec<DeviceId>,
    pub lambda: f64,
}

impl PipelineState {
    /// Trains and clusters for `mode`. Edges-only lookups need no
    /// augmentation, so `requests` only matters for the other modes.
    pub fn build(
        graph: &SocialGraph,
        encoding: &FeatureEncoding,
        mode: LookupMode,
        requests: &[ServiceRequest],
        settings: &PipelineSettings,
    ) -> Result<Self> {
        let mut aug_graph = graph.clone();
        let mut aug_encoding = encoding.clone();
        let mut fakes = Vec::new();
        if mode != LookupMode::EdgesOnly {
            for req in requests {
                if !graph.contains(req.requester) {
                    return Err(Error::UnknownDevice(req.requester));
                }
                let copy = (mode == LookupMode::EdgesAndAttributes).then_some(req.requester);
                let (g, e, fake) =
                    inject_fake_device(&aug_graph, &aug_encoding, &req.required_features, copy)?;
                aug_graph = g;
                aug_encoding = e;
                fakes.push(fake);
            }
        }

        let embed = EmbeddingConfig {
            mode,
            ..settings.embed
        };
        let embedding = train_embedding(&aug_graph, &aug_encoding, &settings.walk, &embed)?;
        let n = aug_graph.node_count();
        let kmeans = KMeansConfig {
            k: settings.k.unwrap_or_else(|| KMeansConfig::default_k(n)),
            max_iterations: settings.kmeans_max_iterations,
            tolerance: settings.kmeans_tolerance,
            seed: settings.kmeans_seed,
        };
        let clustering = kmeans_fit(&embedding.vectors, &kmeans)?;
        debug!(
            "{mode}: {} nodes ({} fake) in {} clusters, inertia {:.4}",
            n,
            fakes.len(),
            clustering.k(),
            clustering.inertia
        );
        Ok(Self {
            mode,
            graph: graph.clone(),
            encoding: encoding.clone(),
            embedding,
            clustering,
            fakes,
            lambda: settings.lambda,
        })
    }

    pub fn context(&self) -> LookupContext<'_> {
        LookupContext {
            social: &self.graph,
            encoding: &self.encoding,
            clustered_ids: &self.embedding.node_ids,
            assignments: &self.clustering.assignments,
            fake_devices: &self.fakes,
        }
    }

    /// Answers the `query`-th request passed to `build`.
    pub fn lookup(&self, query: usize, request: &ServiceRequest) -> Result<LookupResult> {
        let ctx = self.context();
        match self.mode {
            LookupMode::EdgesOnly => lookup_edges_mode(&ctx, request),
            mode => {
                let fake = *self.fakes.get(query).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "no fake device for query {query} in {mode} pipeline"
                    ))
                })?;
                if mode == LookupMode::AttributesOnly {
                    lookup_attributes_mode(&ctx, request, fake)
                } else {
                    lookup_full_mode(&ctx, request, fake, self.lambda)
                }
            }
        }
    }
}

/// Builds a pipeline for one request and answers it.
pub fn lookup_once(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    mode: LookupMode,
    request: &ServiceRequest,
    settings: &PipelineSettings,
) -> Result<LookupResult> {
    PipelineState::build(
        graph,
        encoding,
        mode,
        std::slice::from_ref(request),
        settings,
    )?
    .lookup(0, request)
}
