use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::Deserialize;

use siot_core::cluster::KMeansConfig;
use siot_core::embedding::{EmbeddingConfig, WalkConfig};
use siot_core::eval::{ProtocolConfig, SweepConfig};
use siot_core::graph::SynthConfig;

use crate::UsageError;

/// Optional JSON configuration. Every section falls back to library defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthConfig,
    pub walk: WalkConfig,
    pub embed: EmbeddingConfig,
    pub kmeans: KMeansSection,
    pub lambda: Option<f64>,
    pub protocol: ProtocolConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansSection {
    pub k: Option<usize>,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for KMeansSection {
    fn default() -> Self {
        let d = KMeansConfig::for_points(1, 0);
        Self {
            k: None,
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?;
    Ok(cfg)
}
