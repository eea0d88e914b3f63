use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use super::{DeviceId, SocialGraph};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest-path lengths from node index `source`.
/// `None` marks unreachable nodes.
pub fn dijkstra(graph: &SocialGraph, source: usize) -> Vec<Option<f64>> {
    let mut dist: Vec<Option<f64>> = vec![None; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0.0);
    heap.push(Frontier {
        dist: 0.0,
        node: source,
    });
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if dist[node].is_some_and(|best| d > best) {
            continue;
        }
        for &(next, w) in graph.neighbors(node) {
            let candidate = d + w;
            if dist[next].is_none_or(|best| candidate < best) {
                dist[next] = Some(candidate);
                heap.push(Frontier {
                    dist: candidate,
                    node: next,
                });
            }
        }
    }
    dist
}

/// Unweighted hop counts from node index `source`.
pub fn hop_distances(graph: &SocialGraph, source: usize) -> Vec<Option<usize>> {
    let mut hops = vec![None; graph.node_count()];
    let mut queue = VecDeque::from([source]);
    hops[source] = Some(0);
    while let Some(node) = queue.pop_front() {
        let next_hop = hops[node].map(|h| h + 1);
        for &(next, _) in graph.neighbors(node) {
            if hops[next].is_none() {
                hops[next] = next_hop;
                queue.push_back(next);
            }
        }
    }
    hops
}

/// Shortest-path distances from `source` to each of `targets`; `None` is
/// the unreachable sentinel.
pub fn shortest_path_distance(
    graph: &SocialGraph,
    source: DeviceId,
    targets: impl IntoIterator<Item = DeviceId>,
) -> Result<BTreeMap<DeviceId, Option<f64>>> {
    let src = graph.require_index(source)?;
    let targets: Vec<(DeviceId, usize)> = targets
        .into_iter()
        .map(|t| graph.require_index(t).map(|i| (t, i)))
        .collect::<Result<_>>()?;
    let dist = dijkstra(graph, src);
    Ok(targets.into_iter().map(|(id, i)| (id, dist[i])).collect())
}
