use thiserror::Error;

use crate::graph::DeviceId;

/// Errors produced anywhere in the discovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("duplicate device id {0}")]
    DuplicateDeviceId(DeviceId),

    #[error("friendship references unknown owner {0}")]
    DanglingOwner(u64),

    #[error("only {available} devices match the sampling filter, {requested} requested")]
    InsufficientPopulation { requested: usize, available: usize },

    #[error("unknown device {0}")]
    UnknownDevice(DeviceId),

    #[error("feature vector has width {got}, expected {expected}")]
    FeatureWidth { expected: usize, got: usize },

    #[error("invalid feature vector: {0}")]
    InvalidFeatures(String),

    #[error("unknown value {value:?} for attribute {attribute}")]
    UnknownAttributeValue {
        attribute: &'static str,
        value: String,
    },

    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    DivergedTraining { epoch: usize },

    #[error("empty pair set")]
    EmptyPairSet,

    #[error("k-means needs at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },

    #[error("no candidate devices in the searched cluster")]
    NoCandidates,

    #[error("no candidate device is reachable from requester {requester}")]
    AllUnreachable { requester: DeviceId },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed embedding file: {0}")]
    MalformedEmbedding(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
