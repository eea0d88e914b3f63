use siot_core::embedding::{train_embedding, EmbeddingConfig, EmbeddingMode, WalkConfig};
use siot_core::eval::{two_clique_benchmark, TwoCliqueConfig};
use siot_core::Error;

fn walk(seed: u64) -> WalkConfig {
    WalkConfig {
        walks_per_node: 4,
        walk_length: 10,
        window: 2,
        seed,
        ..WalkConfig::default()
    }
}

fn embed(mode: EmbeddingMode, seed: u64) -> EmbeddingConfig {
    EmbeddingConfig {
        mode,
        dim: 8,
        epochs: 5,
        seed,
        ..EmbeddingConfig::default()
    }
}

fn cliques() -> TwoCliqueConfig {
    TwoCliqueConfig {
        clique_size: 12,
        brands: 3,
        type_agreement: 1.0,
        seed: 4,
    }
}

#[test]
fn edges_only_separates_two_cliques() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    let m = train_embedding(&g, &enc, &walk(1), &embed(EmbeddingMode::EdgesOnly, 1)).unwrap();
    let s = 12;
    let dot = |a: usize, b: usize| m.vectors.row(a).dot(&m.vectors.row(b));
    let (mut within, mut across) = (0.0, 0.0);
    for a in 0..2 * s {
        for b in 0..2 * s {
            if a == b {
                continue;
            }
            if (a < s) == (b < s) {
                within += dot(a, b);
            } else {
                across += dot(a, b);
            }
        }
    }
    let pairs_within = (2 * s * (s - 1)) as f64;
    let pairs_across = (2 * s * s) as f64;
    assert!(within / pairs_within > across / pairs_across);
    assert!(*m.accuracy_history.last().unwrap() > 0.9);
}

#[test]
fn same_seed_same_vectors() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    for mode in EmbeddingMode::ALL {
        let a = train_embedding(&g, &enc, &walk(2), &embed(mode, 3)).unwrap();
        let b = train_embedding(&g, &enc, &walk(2), &embed(mode, 3)).unwrap();
        assert_eq!(a, b);
        let c = train_embedding(&g, &enc, &walk(2), &embed(mode, 4)).unwrap();
        assert_ne!(a.vectors, c.vectors);
    }
}

#[test]
fn edges_only_ignores_features() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    let perms: Vec<Vec<usize>> = enc
        .vocabularies()
        .iter()
        .map(|v| (0..v.values.len()).rev().collect())
        .collect();
    let permuted = enc.permuted_categories(&perms);
    assert_ne!(permuted.matrix(), enc.matrix());
    let cfg = embed(EmbeddingMode::EdgesOnly, 5);
    let a = train_embedding(&g, &enc, &walk(5), &cfg).unwrap();
    let b = train_embedding(&g, &permuted, &walk(5), &cfg).unwrap();
    assert_eq!(a.vectors, b.vectors);
}

#[test]
fn attributes_only_ties_identical_devices() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    let m = train_embedding(&g, &enc, &walk(6), &embed(EmbeddingMode::AttributesOnly, 6)).unwrap();
    for a in 0..g.node_count() {
        for b in 0..g.node_count() {
            if enc.row(a) == enc.row(b) {
                assert_eq!(m.vectors.row(a), m.vectors.row(b));
            }
        }
    }
}

#[test]
fn loss_falls_under_exact_softmax() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    let cfg = EmbeddingConfig {
        negative_samples: 0,
        learning_rate: 0.01,
        ..embed(EmbeddingMode::EdgesOnly, 7)
    };
    let m = train_embedding(&g, &enc, &walk(7), &cfg).unwrap();
    assert!(m.loss_history.last().unwrap() < m.loss_history.first().unwrap());
}

#[test]
fn runaway_learning_rate_is_reported() {
    let (g, enc) = two_clique_benchmark(&cliques()).unwrap();
    let cfg = EmbeddingConfig {
        negative_samples: 0,
        learning_rate: 1e200,
        ..embed(EmbeddingMode::EdgesOnly, 8)
    };
    let err = train_embedding(&g, &enc, &walk(8), &cfg).unwrap_err();
    assert!(matches!(err, Error::DivergedTraining { epoch: 1 }), "{err}");
}
