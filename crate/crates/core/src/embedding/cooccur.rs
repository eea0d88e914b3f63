use serde::{Deserialize, Serialize};

/// Multiset of `(center, context)` node-index pairs harvested from walks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoOccurrenceSet {
    pub pairs: Vec<(u32, u32)>,
}

impl CoOccurrenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// How often each node appears as a context, for `n` nodes.
    pub fn context_counts(&self, n: usize) -> Vec<u64> {
        let mut counts = vec![0; n];
        for &(_, ctx) in &self.pairs {
            counts[ctx as usize] += 1;
        }
        counts
    }
}

/// Expands each walk position `i` into pairs `(walk[i], walk[j])` for every
/// `j != i` with `|i - j| <= window`. Pairs joining a node to itself (a walk
/// that revisited it) are dropped.
pub fn co_occurrences(walks: &[Vec<u32>], window: usize) -> CoOccurrenceSet {
    let mut pairs = Vec::new();
    for walk in walks {
        for (i, &center) in walk.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(walk.len().saturating_sub(1));
            for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i && ctx != center {
                    pairs.push((center, ctx));
                }
            }
        }
    }
    CoOccurrenceSet { pairs }
}
