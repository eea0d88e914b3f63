use proptest::prelude::*;

use siot_core::embedding::{
    co_occurrences, generate_walks, generate_walks_on, WalkConfig, WalkGraph,
};
use siot_core::graph::{DeviceId, Edge, RelationTag, SocialGraph};

fn graph(n: u64, edges: &[(u64, u64, f64)]) -> SocialGraph {
    SocialGraph::from_parts(
        (0..n).map(DeviceId),
        edges.iter().map(|&(u, v, w)| {
            (
                DeviceId(u),
                DeviceId(v),
                Edge {
                    relation: RelationTag::Generic,
                    weight: w,
                },
            )
        }),
    )
    .unwrap()
}

fn within(count: usize, total: usize, p: f64) -> bool {
    let mean = total as f64 * p;
    let sigma = (total as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() < 5.0 * sigma.max(1.0)
}

#[test]
fn first_step_follows_edge_weights() {
    // star around 0 with weights 1, 2, 3
    let g = graph(4, &[(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0)]);
    let cfg = WalkConfig {
        walks_per_node: 6000,
        walk_length: 2,
        seed: 5,
        ..WalkConfig::default()
    };
    let walks = generate_walks(&g, &cfg);
    let from0: Vec<&Vec<u32>> = walks.iter().filter(|w| w[0] == 0).collect();
    let total = from0.len();
    for (x, p) in [(1, 1.0 / 6.0), (2, 2.0 / 6.0), (3, 3.0 / 6.0)] {
        let c = from0.iter().filter(|w| w[1] == x).count();
        assert!(within(c, total, p), "{x}: {c}/{total}");
    }
}

#[test]
fn second_step_uses_return_and_inout_bias() {
    // 0 - 1, 1 - 2, 1 - 3, 0 - 2: from (prev 0, cur 1) the options are
    // back to 0 (1/p), to 2 (neighbor of 0, weight 1), to 3 (1/q)
    let g = graph(4, &[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0), (0, 2, 1.0)]);
    let (p, q) = (0.5, 4.0);
    let cfg = WalkConfig {
        walks_per_node: 20_000,
        walk_length: 3,
        return_param_p: p,
        inout_param_q: q,
        seed: 6,
        ..WalkConfig::default()
    };
    let walks = generate_walks(&g, &cfg);
    let relevant: Vec<&Vec<u32>> = walks.iter().filter(|w| w[0] == 0 && w[1] == 1).collect();
    let weights = [1.0 / p, 1.0, 1.0 / q];
    let z: f64 = weights.iter().sum();
    for (x, w) in [0u32, 2, 3].into_iter().zip(weights) {
        let c = relevant.iter().filter(|walk| walk[2] == x).count();
        assert!(
            within(c, relevant.len(), w / z),
            "{x}: {c}/{}",
            relevant.len()
        );
    }
}

#[test]
fn complete_graph_steps_are_uniform() {
    let n = 5;
    let cfg = WalkConfig {
        walks_per_node: 4000,
        walk_length: 2,
        seed: 7,
        ..WalkConfig::default()
    };
    let walks = generate_walks_on(WalkGraph::Complete { nodes: n }, &cfg);
    let from0: Vec<&Vec<u32>> = walks.iter().filter(|w| w[0] == 0).collect();
    for x in 1..n as u32 {
        let c = from0.iter().filter(|w| w[1] == x).count();
        assert!(within(c, from0.len(), 0.25), "{x}: {c}");
    }
    assert!(from0.iter().all(|w| w[1] != 0));
}

#[test]
fn isolated_nodes_walk_alone_and_seeds_reproduce() {
    let g = graph(3, &[(0, 1, 1.0)]);
    let cfg = WalkConfig {
        walks_per_node: 3,
        seed: 8,
        ..WalkConfig::default()
    };
    let walks = generate_walks(&g, &cfg);
    assert_eq!(walks.len(), 9);
    for w in walks.iter().filter(|w| w[0] == 2) {
        assert_eq!(w, &vec![2]);
    }
    for w in walks.iter().filter(|w| w[0] != 2) {
        assert_eq!(w.len(), cfg.walk_length);
    }
    assert_eq!(walks, generate_walks(&g, &cfg));
}

proptest! {
    #[test]
    fn co_occurrences_match_double_loop(
        walks in proptest::collection::vec(proptest::collection::vec(0u32..6, 1..12), 0..6),
        window in 1usize..5,
    ) {
        let mut expected = Vec::new();
        for w in &walks {
            for i in 0..w.len() {
                for j in 0..w.len() {
                    if i != j && i.abs_diff(j) <= window && w[i] != w[j] {
                        expected.push((w[i], w[j]));
                    }
                }
            }
        }
        let mut got = co_occurrences(&walks, window).pairs;
        got.sort_unstable();
        expected.sort_unstable();
        prop_assert_eq!(got, expected);
    }
}
