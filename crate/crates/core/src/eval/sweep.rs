use serde::{Deserialize, Serialize};

use super::metrics::epochs_to_threshold;
use crate::embedding::{train_embedding, EmbeddingConfig, EmbeddingMode, WalkConfig};
use crate::error::{Error, Result};
use crate::graph::{
    build_sfor_edges, sample_subnetwork, synthesize_catalog, FeatureEncoding, SampleFilter,
    SocialGraph, SynthConfig,
};

/// Seeded benchmark the sweep trains on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub synth: SynthConfig,
    pub sample_size: usize,
    pub filter: SampleFilter,
    pub walk: WalkConfig,
    /// `mode` and `dim` are set per cell.
    pub embed: EmbeddingConfig,
    pub modes: Vec<EmbeddingMode>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            sample_size: 933,
            filter: SampleFilter::default(),
            walk: WalkConfig::default(),
            embed: EmbeddingConfig::default(),
            modes: EmbeddingMode::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAccuracy {
    pub mode: EmbeddingMode,
    pub final_accuracy: Option<f64>,
    pub best_accuracy: Option<f64>,
    pub epochs_to_95: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub accuracy: Vec<ModeAccuracy>,
}

/// Trains every mode at every dimension on a fixed graph.
pub fn dimension_sweep_on(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    walk: &WalkConfig,
    embed: &EmbeddingConfig,
    modes: &[EmbeddingMode],
    dims: &[usize],
) -> Result<Vec<SweepRow>> {
    if dims.is_empty() {
        return Err(Error::InvalidConfig("dimension list is empty".into()));
    }
    dims.iter()
        .map(|&dim| {
            let accuracy = modes
                .iter()
                .map(|&mode| {
                    let m = train_embedding(
                        graph,
                        encoding,
                        walk,
                        &EmbeddingConfig {
                            mode,
                            dim,
                            ..*embed
                        },
                    )?;
                    let h = &m.accuracy_history;
                    Ok(ModeAccuracy {
                        mode,
                        final_accuracy: h.last().copied(),
                        best_accuracy: h.iter().copied().reduce(f64::max),
                        epochs_to_95: epochs_to_threshold(h, 0.95),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(SweepRow { dim, accuracy })
        })
        .collect()
}

/// Synthesizes and samples the benchmark described by `config`, then sweeps.
pub fn dimension_sweep(config: &SweepConfig, dims: &[usize]) -> Result<Vec<SweepRow>> {
    if dims.is_empty() {
        return Err(Error::InvalidConfig("dimension list is empty".into()));
    }
    let (catalog, owners) = synthesize_catalog(&config.synth)?;
    let (sample, owners) = sample_subnetwork(
        &catalog,
        &owners,
        config.sample_size,
        config.filter,
        config.seed,
    )?;
    let graph = build_sfor_edges(&sample, &owners)?;
    let encoding = FeatureEncoding::encode(&sample)?;
    let walk = WalkConfig {
        seed: config.seed,
        ..config.walk
    };
    let embed = EmbeddingConfig {
        seed: config.seed,
        ..config.embed
    };
    dimension_sweep_on(&graph, &encoding, &walk, &embed, &config.modes, dims)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            synth: SynthConfig {
                n_private: 60,
                n_public: 0,
                n_owners: 15,
                vocab_sizes: [3, 3, 1, 2],
                friendship_prob: 0.1,
                seed: 5,
            },
            sample_size: 40,
            walk: WalkConfig {
                walks_per_node: 2,
                walk_length: 8,
                ..Default::default()
            },
            embed: EmbeddingConfig {
                epochs: 2,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn one_row_per_dim() {
        let rows = dimension_sweep(&small(), &[4]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].dim, 4);
        assert_eq!(rows[0].accuracy.len(), 3);
        assert!(dimension_sweep(&small(), &[]).is_err());
    }
}
