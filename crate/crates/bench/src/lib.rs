//! Shared fixtures for the pipeline benchmarks.

use siot_core::graph::{sample_subnetwork, synthesize_catalog, SampleFilter, SynthConfig};
use siot_core::{build_sfor_edges, FeatureEncoding, SocialGraph};

/// A seeded sample of `n` private static devices from the default synthetic
/// catalog.
pub fn sampled_network(n: usize, seed: u64) -> (SocialGraph, FeatureEncoding) {
    let (catalog, owners) = synthesize_catalog(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .expect("default synthetic catalog is valid");
    let (sample, owners) = sample_subnetwork(&catalog, &owners, n, SampleFilter::default(), seed)
        .expect("catalog holds enough private static devices");
    let graph = build_sfor_edges(&sample, &owners).expect("sample builds a graph");
    let encoding = FeatureEncoding::encode(&sample).expect("sample encodes");
    (graph, encoding)
}
