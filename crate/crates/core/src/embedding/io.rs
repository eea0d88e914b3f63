//! Embedding file format.
//!
//! Binary body: four little-endian `u64` header words `(n, dim, mode, seed)`
//! followed by `n * dim` little-endian `f64` values in row-major order. Mode
//! codes are 0 = edges only, 1 = attributes only, 2 = edges and attributes.
//! Node ids and training histories go to a JSON sidecar.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, EmbeddingMode};
use crate::error::{Error, Result};
use crate::graph::DeviceId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub mode: EmbeddingMode,
    pub dim: usize,
    pub seed: u64,
    pub node_ids: Vec<DeviceId>,
    pub loss_history: Vec<f64>,
    pub accuracy_history: Vec<f64>,
}

impl From<&EmbeddingMatrix> for EmbeddingSidecar {
    fn from(m: &EmbeddingMatrix) -> Self {
        Self {
            mode: m.mode,
            dim: m.dim(),
            seed: m.seed,
            node_ids: m.node_ids.clone(),
            loss_history: m.loss_history.clone(),
            accuracy_history: m.accuracy_history.clone(),
        }
    }
}

pub fn write_embedding<W: Write>(mut sink: W, m: &EmbeddingMatrix) -> Result<()> {
    let (n, dim) = m.vectors.dim();
    for word in [n as u64, dim as u64, m.mode.code(), m.seed] {
        sink.write_all(&word.to_le_bytes())?;
    }
    for x in m.vectors.iter() {
        sink.write_all(&x.to_le_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a binary embedding and joins it with its sidecar.
pub fn read_embedding<R: Read>(
    mut source: R,
    sidecar: EmbeddingSidecar,
) -> Result<EmbeddingMatrix> {
    let mut word = [0u8; 8];
    let mut header = [0u64; 4];
    for h in &mut header {
        source.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    let [n, dim, mode, seed] = header;
    let mode = EmbeddingMode::from_code(mode)
        .ok_or_else(|| Error::MalformedEmbedding(format!("unknown mode code {mode}")))?;
    let (n, dim) = (n as usize, dim as usize);
    if sidecar.node_ids.len() != n
        || sidecar.dim != dim
        || sidecar.mode != mode
        || sidecar.seed != seed
    {
        return Err(Error::MalformedEmbedding(
            "sidecar does not match binary header".into(),
        ));
    }
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        source.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    if source.read(&mut word)? != 0 {
        return Err(Error::MalformedEmbedding("trailing bytes".into()));
    }
    let vectors = Array2::from_shape_vec((n, dim), data)
        .map_err(|e| Error::MalformedEmbedding(e.to_string()))?;
    Ok(EmbeddingMatrix {
        node_ids: sidecar.node_ids,
        mode,
        seed,
        vectors,
        loss_history: sidecar.loss_history,
        accuracy_history: sidecar.accuracy_history,
    })
}
