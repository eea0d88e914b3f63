use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::dot;
use super::{co_occurrences, generate_walks, WalkConfig};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;

/// Balanced pair classification accuracy.
///
/// Every pair is scored by the dot product of its two vectors; a pair is
/// called positive iff its score exceeds the median score of the pooled
/// positive and negative pairs.
pub fn embedding_accuracy(
    vectors: &Array2<f64>,
    positives: &[(u32, u32)],
    negatives: &[(u32, u32)],
) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::EmptyPairSet);
    }
    if positives.len() != negatives.len() {
        return Err(Error::InvalidConfig(format!(
            "unbalanced pair sets: {} positive, {} negative",
            positives.len(),
            negatives.len()
        )));
    }
    let score = |&(a, b): &(u32, u32)| {
        let ra = vectors.row(a as usize);
        let rb = vectors.row(b as usize);
        dot(ra.as_slice().unwrap(), rb.as_slice().unwrap())
    };
    let pos: Vec<f64> = positives.iter().map(score).collect();
    let neg: Vec<f64> = negatives.iter().map(score).collect();
    let mut pooled: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let m = pooled.len();
    let median = if m.is_multiple_of(2) {
        0.5 * (pooled[m / 2 - 1] + pooled[m / 2])
    } else {
        pooled[m / 2]
    };
    let correct =
        pos.iter().filter(|&&s| s > median).count() + neg.iter().filter(|&&s| s <= median).count();
    Ok(correct as f64 / m as f64)
}

/// Held-out evaluation pairs for [`embedding_accuracy`].
///
/// Positives are distinct co-occurrences from fresh walks on the social graph;
/// negatives are uniform node pairs that neither co-occur on those walks nor
/// share an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyProbe {
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
}

impl AccuracyProbe {
    /// Returns `None` when the graph yields no positive pairs at all.
    pub fn from_graph(
        graph: &SocialGraph,
        walk: &WalkConfig,
        max_pairs: usize,
        seed: u64,
    ) -> Option<Self> {
        let n = graph.node_count();
        if n < 2 || graph.edge_count() == 0 {
            return None;
        }
        let fresh = WalkConfig { seed, ..*walk };
        let walks = generate_walks(graph, &fresh);
        let seen: HashSet<(u32, u32)> = co_occurrences(&walks, walk.window)
            .pairs
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut positives: Vec<(u32, u32)> = seen.iter().copied().collect();
        positives.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        positives.shuffle(&mut rng);
        positives.truncate(max_pairs);

        let mut negatives = Vec::with_capacity(positives.len());
        let mut attempts = 0;
        while negatives.len() < positives.len() && attempts < 100 * max_pairs.max(1) {
            attempts += 1;
            let a = rng.random_range(0..n as u32);
            let b = rng.random_range(0..n as u32);
            let key = (a.min(b), a.max(b));
            if a == b || seen.contains(&key) || graph.has_edge_between(a as usize, b as usize) {
                continue;
            }
            negatives.push((a, b));
        }
        positives.truncate(negatives.len());
        (!positives.is_empty()).then_some(Self {
            positives,
            negatives,
        })
    }

    pub fn accuracy(&self, vectors: &Array2<f64>) -> Result<f64> {
        embedding_accuracy(vectors, &self.positives, &self.negatives)
    }
}
