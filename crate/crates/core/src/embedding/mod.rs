//! Node embeddings from biased random walks.
//!
//! Walks over the (mode-dependent) graph yield co-occurrence pairs; node
//! representations are trained with SGD so that co-occurring nodes have a
//! high dot-product softmax likelihood. Three modes are supported:
//!
//! * `EdgesOnly`: attributes are neutralized; every node owns a free vector
//!   and walks run on the social graph.
//! * `AttributesOnly`: the graph is neutralized into the unweighted complete
//!   graph; a node's vector is a learned linear encoding of its one-hot row.
//! * `EdgesAndAttributes`: social-graph walks, and a node's vector is the sum
//!   of its free vector and the encoding of its one-hot row.

mod accuracy;
mod cooccur;
mod io;
mod objective;
mod train;
mod walks;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DeviceId, FeatureEncoding, SocialGraph};

pub use accuracy::{embedding_accuracy, AccuracyProbe};
pub use cooccur::{co_occurrences, CoOccurrenceSet};
pub use io::{read_embedding, write_embedding, EmbeddingSidecar};
pub use objective::{loss_and_gradient, softmax_probabilities, Objective};
pub use train::train_embedding;
pub use walks::{generate_walks, generate_walks_on, WalkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    EdgesOnly,
    AttributesOnly,
    EdgesAndAttributes,
}

impl EmbeddingMode {
    pub const ALL: [EmbeddingMode; 3] = [
        EmbeddingMode::EdgesOnly,
        EmbeddingMode::AttributesOnly,
        EmbeddingMode::EdgesAndAttributes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingMode::EdgesOnly => "edges_only",
            EmbeddingMode::AttributesOnly => "attributes_only",
            EmbeddingMode::EdgesAndAttributes => "edges_and_attributes",
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            EmbeddingMode::EdgesOnly => 0,
            EmbeddingMode::AttributesOnly => 1,
            EmbeddingMode::EdgesAndAttributes => 2,
        }
    }

    pub(crate) fn from_code(code: u64) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" | "edges_only" => Ok(EmbeddingMode::EdgesOnly),
            "attributes" | "attributes_only" => Ok(EmbeddingMode::AttributesOnly),
            "full" | "edges_and_attributes" => Ok(EmbeddingMode::EdgesAndAttributes),
            other => Err(Error::InvalidConfig(format!(
                "unknown embedding mode {other:?}"
            ))),
        }
    }
}

/// Random-walk strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Number of nodes per walk, start included.
    pub walk_length: usize,
    pub return_param_p: f64,
    pub inout_param_q: f64,
    /// Co-occurrence window on each side of a position.
    pub window: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks_per_node: 10,
            walk_length: 20,
            return_param_p: 1.0,
            inout_param_q: 1.0,
            window: 5,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 || self.walk_length == 0 || self.window == 0 {
            return Err(Error::InvalidConfig(
                "walks_per_node, walk_length and window must be positive".into(),
            ));
        }
        if !(self.return_param_p > 0.0 && self.inout_param_q > 0.0) {
            return Err(Error::InvalidConfig("p and q must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub mode: EmbeddingMode,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Noise samples per pair; 0 selects the exact softmax.
    pub negative_samples: usize,
    pub seed: u64,
    /// 1 runs the deterministic sequential trainer; more threads switch to
    /// lock-free asynchronous updates.
    pub threads: usize,
    /// Upper bound on positive (and negative) pairs used for accuracy tracking.
    pub accuracy_pairs: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            mode: EmbeddingMode::EdgesAndAttributes,
            dim: 32,
            epochs: 20,
            learning_rate: 0.025,
            negative_samples: 5,
            seed: 0,
            threads: 1,
            accuracy_pairs: 500,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "dim and epochs must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Learned vectors plus training telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub node_ids: Vec<DeviceId>,
    pub mode: EmbeddingMode,
    pub seed: u64,
    /// One row per node, in graph order.
    pub vectors: Array2<f64>,
    /// Summed per-pair loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Accuracy after each epoch; empty when the graph offered no evaluation pairs.
    pub accuracy_history: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row_of(&self, id: DeviceId) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.node_ids
            .binary_search(&id)
            .ok()
            .map(|i| self.vectors.row(i))
    }
}

/// Mode-specific inputs to training.
#[derive(Debug, Clone, Copy)]
pub struct ModeInputs<'a> {
    pub walk_graph: WalkGraph<'a>,
    /// Feature rows fed through the learned encoder, if the mode uses them.
    pub features: Option<&'a Array2<f64>>,
    /// Whether every node also owns a free trainable vector.
    pub free_vectors: bool,
}

/// Neutralizes whatever the mode ignores.
pub fn prepare_mode_inputs<'a>(
    graph: &'a SocialGraph,
    encoding: &'a FeatureEncoding,
    mode: EmbeddingMode,
) -> Result<ModeInputs<'a>> {
    if encoding.device_ids() != graph.node_ids() {
        return Err(Error::InvalidConfig(
            "feature rows do not match graph node order".into(),
        ));
    }
    Ok(match mode {
        EmbeddingMode::EdgesOnly => ModeInputs {
            walk_graph: WalkGraph::Social(graph),
            features: None,
            free_vectors: true,
        },
        EmbeddingMode::AttributesOnly => ModeInputs {
            walk_graph: WalkGraph::Complete {
                nodes: graph.node_count(),
            },
            features: Some(encoding.matrix()),
            free_vectors: false,
        },
        EmbeddingMode::EdgesAndAttributes => ModeInputs {
            walk_graph: WalkGraph::Social(graph),
            features: Some(encoding.matrix()),
            free_vectors: true,
        },
    })
}
