use crate::error::{Error, Result};
use crate::graph::{hop_distances, DeviceId, FeatureEncoding, SocialGraph};

/// Mean over candidates of `100 / (1 + hops)` from the requester; unreachable
/// candidates contribute 0.
pub fn relation_similarity(
    graph: &SocialGraph,
    requester: DeviceId,
    candidates: &[DeviceId],
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let hops = hop_distances(graph, graph.require_index(requester)?);
    let mut total = 0.0;
    for &c in candidates {
        if let Some(h) = hops[graph.require_index(c)?] {
            total += 100.0 / (1.0 + h as f64);
        }
    }
    Ok(total / candidates.len() as f64)
}

/// Mean over candidates of the percentage of attribute blocks whose category
/// matches the required features.
pub fn characteristic_similarity(
    encoding: &FeatureEncoding,
    required: &[f64],
    candidates: &[DeviceId],
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    encoding.check_features(required)?;
    let attrs = encoding.attribute_count() as f64;
    let mut total = 0.0;
    for &c in candidates {
        let row = encoding.row_of(c).ok_or(Error::UnknownDevice(c))?;
        total += 100.0 * encoding.matching_blocks(row, required) as f64 / attrs;
    }
    Ok(total / candidates.len() as f64)
}

/// First (1-based) epoch whose accuracy reaches `threshold`.
pub fn epochs_to_threshold(accuracy: &[f64], threshold: f64) -> Option<usize> {
    accuracy.iter().position(|&a| a >= threshold).map(|i| i + 1)
}

/// Accuracy level a run settles at: the mean over its last quarter of epochs.
pub fn plateau_level(accuracy: &[f64]) -> Option<f64> {
    if accuracy.is_empty() {
        return None;
    }
    let tail = accuracy.len().div_ceil(4);
    Some(accuracy[accuracy.len() - tail..].iter().sum::<f64>() / tail as f64)
}

/// First (1-based) epoch whose accuracy reaches `fraction` of the plateau level.
pub fn epochs_to_plateau(accuracy: &[f64], fraction: f64) -> Option<usize> {
    epochs_to_threshold(accuracy, fraction * plateau_level(accuracy)?)
}

/// Arithmetic mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}
