//! Service discovery for social IoT networks.
//!
//! The pipeline builds a social graph over devices ([`graph`]), learns node
//! embeddings from biased random walks with a skip-gram co-occurrence
//! objective ([`embedding`]), partitions the embedding space with k-means
//! ([`cluster`]) and answers service-lookup queries inside the relevant
//! cluster ([`lookup`]). [`eval`] wraps the whole thing in a seeded Monte
//! Carlo harness.

pub mod cluster;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod lookup;

pub use cluster::{assign_cluster, kmeans_fit, ClusteringResult, KMeansConfig};
pub use embedding::{train_embedding, EmbeddingConfig, EmbeddingMatrix, EmbeddingMode, WalkConfig};
pub use error::{Error, Result};
pub use graph::{
    build_sfor_edges, DeviceId, DeviceRecord, FeatureEncoding, OwnerSocialNetwork, ServiceRequest,
    SocialGraph,
};
pub use lookup::{LookupMode, LookupResult};
