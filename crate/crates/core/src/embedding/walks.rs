//! Second-order biased random walks.
//!
//! From a walk that just moved `t -> v`, the unnormalized weight of stepping
//! to neighbor `x` of `v` is `w(v,x)/p` when `x == t`, `w(v,x)` when `x` is
//! adjacent to `t`, and `w(v,x)/q` otherwise. The first step of a walk is
//! weighted by edge weight alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::WalkConfig;
use crate::graph::SocialGraph;

/// Graph a walk runs on. `Complete` is the unweighted complete graph over
/// `nodes` vertices, sampled lazily without materializing its edges.
#[derive(Debug, Clone, Copy)]
pub enum WalkGraph<'a> {
    Social(&'a SocialGraph),
    Complete { nodes: usize },
}

impl WalkGraph<'_> {
    pub fn node_count(&self) -> usize {
        match self {
            WalkGraph::Social(g) => g.node_count(),
            WalkGraph::Complete { nodes } => *nodes,
        }
    }

    fn first_step<R: Rng>(&self, v: usize, rng: &mut R) -> Option<usize> {
        match *self {
            WalkGraph::Social(g) => {
                let neighbors = g.neighbors(v);
                if neighbors.is_empty() {
                    return None;
                }
                let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
                Some(pick(neighbors.iter().map(|&(x, w)| (x, w)), total, rng))
            }
            WalkGraph::Complete { nodes } => {
                if nodes < 2 {
                    return None;
                }
                let x = rng.random_range(0..nodes - 1);
                Some(if x >= v { x + 1 } else { x })
            }
        }
    }

    fn next_step<R: Rng>(&self, t: usize, v: usize, p: f64, q: f64, rng: &mut R) -> Option<usize> {
        match *self {
            WalkGraph::Social(g) => {
                let neighbors = g.neighbors(v);
                if neighbors.is_empty() {
                    return None;
                }
                let bias = |x: usize, w: f64| {
                    if x == t {
                        w / p
                    } else if g.has_edge_between(t, x) {
                        w
                    } else {
                        w / q
                    }
                };
                let total: f64 = neighbors.iter().map(|&(x, w)| bias(x, w)).sum();
                Some(pick(
                    neighbors.iter().map(|&(x, w)| (x, bias(x, w))),
                    total,
                    rng,
                ))
            }
            WalkGraph::Complete { nodes } => {
                // every x other than t is adjacent to t, so only the return step is biased
                if nodes < 2 {
                    return None;
                }
                let ret = 1.0 / p;
                let total = ret + (nodes - 2) as f64;
                if rng.random::<f64>() * total < ret {
                    return Some(t);
                }
                let (lo, hi) = (t.min(v), t.max(v));
                let mut x = rng.random_range(0..nodes - 2);
                if x >= lo {
                    x += 1;
                }
                if x >= hi {
                    x += 1;
                }
                Some(x)
            }
        }
    }

    fn walk(&self, start: usize, config: &WalkConfig, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let mut walk = Vec::with_capacity(config.walk_length);
        walk.push(start as u32);
        if config.walk_length < 2 {
            return walk;
        }
        let Some(mut cur) = self.first_step(start, rng) else {
            return walk;
        };
        let mut prev = start;
        walk.push(cur as u32);
        while walk.len() < config.walk_length {
            match self.next_step(prev, cur, config.return_param_p, config.inout_param_q, rng) {
                Some(next) => {
                    prev = cur;
                    cur = next;
                    walk.push(cur as u32);
                }
                None => break,
            }
        }
        walk
    }
}

fn pick<R: Rng>(weighted: impl Iterator<Item = (usize, f64)>, total: f64, rng: &mut R) -> usize {
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (x, w) in weighted {
        if target < w {
            return x;
        }
        target -= w;
        last = x;
    }
    last
}

/// Generates `walks_per_node` walks from every node, ordered round by round.
///
/// Walk `r * n + start` draws from its own ChaCha stream, so the output does
/// not depend on how rayon schedules the work.
pub fn generate_walks_on(graph: WalkGraph<'_>, config: &WalkConfig) -> Vec<Vec<u32>> {
    let n = graph.node_count();
    (0..n * config.walks_per_node)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(w as u64);
            graph.walk(w % n, config, &mut rng)
        })
        .collect()
}

/// Walks over a social graph. Elements are node indices in graph order.
pub fn generate_walks(graph: &SocialGraph, config: &WalkConfig) -> Vec<Vec<u32>> {
    generate_walks_on(WalkGraph::Social(graph), config)
}
