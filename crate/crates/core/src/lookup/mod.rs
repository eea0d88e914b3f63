//! Service lookup over a clustered embedding.
//!
//! Each mode searches one cluster and ranks its members differently:
//!
//! * edges only: the requester's own cluster, ranked by euclidean distance
//!   between a candidate's one-hot row and the required features;
//! * attributes only: the cluster of an isolated fake device carrying the
//!   required features, ranked by shortest-path distance to the requester in
//!   the original graph;
//! * edges and attributes: the cluster of a fake device carrying the required
//!   features and the requester's relations, ranked by a min-max normalized
//!   sum of both distances.

mod pipeline;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMode;
use crate::error::{Error, Result};
use crate::graph::{dijkstra, DeviceId, FeatureEncoding, ServiceRequest, SocialGraph};

pub use pipeline::{lookup_once, PipelineSettings, PipelineState};

/// Lookup strategies map one-to-one onto embedding modes.
pub type LookupMode = EmbeddingMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub device: DeviceId,
    pub characteristic_distance: f64,
    /// Shortest-path distance from the requester; `None` when unreachable.
    pub social_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupResult {
    pub mode: LookupMode,
    pub requester: DeviceId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fake_device: Option<DeviceId>,
    /// Searched cluster minus requester and fake devices, by ascending id.
    pub candidates: Vec<CandidateScore>,
    pub selected: DeviceId,
}

impl LookupResult {
    pub fn candidate_ids(&self) -> Vec<DeviceId> {
        self.candidates.iter().map(|c| c.device).collect()
    }

    pub fn selected_score(&self) -> &CandidateScore {
        self.candidates
            .iter()
            .find(|c| c.device == self.selected)
            .expect("selected device is a candidate")
    }
}

/// What a lookup needs to know about a fitted pipeline.
#[derive(Debug, Clone, Copy)]
pub struct LookupContext<'a> {
    /// Original social graph; shortest paths are measured here.
    pub social: &'a SocialGraph,
    /// Feature rows of the original devices.
    pub encoding: &'a FeatureEncoding,
    /// Ids of the clustered points, aligned with `assignments`.
    pub clustered_ids: &'a [DeviceId],
    pub assignments: &'a [usize],
    /// Transient devices that may never be returned as candidates.
    pub fake_devices: &'a [DeviceId],
}

impl LookupContext<'_> {
    fn cluster_of(&self, id: DeviceId) -> Result<usize> {
        self.clustered_ids
            .iter()
            .position(|&d| d == id)
            .map(|i| self.assignments[i])
            .ok_or(Error::UnknownDevice(id))
    }

    /// Members of `id`'s cluster other than the requester and fake devices.
    fn candidates_around(&self, anchor: DeviceId, requester: DeviceId) -> Result<Vec<DeviceId>> {
        let cluster = self.cluster_of(anchor)?;
        let mut out: Vec<DeviceId> = self
            .clustered_ids
            .iter()
            .zip(self.assignments)
            .filter(|&(&d, &c)| c == cluster && d != requester && !self.fake_devices.contains(&d))
            .map(|(&d, _)| d)
            .collect();
        out.sort_unstable();
        if out.is_empty() {
            return Err(Error::NoCandidates);
        }
        Ok(out)
    }

    fn score(
        &self,
        request: &ServiceRequest,
        candidates: &[DeviceId],
    ) -> Result<Vec<CandidateScore>> {
        let src = self.social.require_index(request.requester)?;
        let dist = dijkstra(self.social, src);
        candidates
            .iter()
            .map(|&d| {
                let row = self.encoding.row_of(d).ok_or(Error::UnknownDevice(d))?;
                Ok(CandidateScore {
                    device: d,
                    characteristic_distance: euclidean(row, &request.required_features),
                    social_distance: dist[self.social.require_index(d)?],
                })
            })
            .collect()
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn finish(
    mode: LookupMode,
    request: &ServiceRequest,
    fake: Option<DeviceId>,
    candidates: Vec<CandidateScore>,
    selected: DeviceId,
) -> LookupResult {
    LookupResult {
        mode,
        requester: request.requester,
        fake_device: fake,
        candidates,
        selected,
    }
}

/// Searches the requester's cluster for the closest characteristics.
pub fn lookup_edges_mode(
    ctx: &LookupContext<'_>,
    request: &ServiceRequest,
) -> Result<LookupResult> {
    let ids = ctx.candidates_around(request.requester, request.requester)?;
    let scores = ctx.score(request, &ids)?;
    let selected = scores
        .iter()
        .min_by(|a, b| {
            a.characteristic_distance
                .total_cmp(&b.characteristic_distance)
                .then(a.device.cmp(&b.device))
        })
        .map(|c| c.device)
        .expect("candidates are non-empty");
    Ok(finish(
        LookupMode::EdgesOnly,
        request,
        None,
        scores,
        selected,
    ))
}

fn social_order(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Searches the fake device's cluster for the socially closest device.
pub fn lookup_attributes_mode(
    ctx: &LookupContext<'_>,
    request: &ServiceRequest,
    fake: DeviceId,
) -> Result<LookupResult> {
    let ids = ctx.candidates_around(fake, request.requester)?;
    let scores = ctx.score(request, &ids)?;
    if scores.iter().all(|c| c.social_distance.is_none()) {
        return Err(Error::AllUnreachable {
            requester: request.requester,
        });
    }
    let selected = scores
        .iter()
        .min_by(|a, b| {
            social_order(a.social_distance, b.social_distance)
                .then(
                    a.characteristic_distance
                        .total_cmp(&b.characteristic_distance),
                )
                .then(a.device.cmp(&b.device))
        })
        .map(|c| c.device)
        .expect("candidates are non-empty");
    Ok(finish(
        LookupMode::AttributesOnly,
        request,
        Some(fake),
        scores,
        selected,
    ))
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Combined scores used by the full mode: min-max normalized characteristic
/// distance plus `lambda` times min-max normalized social distance. An
/// unreachable candidate counts as one unit beyond the farthest reachable one.
pub fn combined_scores(scores: &[CandidateScore], lambda: f64) -> Vec<f64> {
    let chars: Vec<f64> = scores.iter().map(|c| c.characteristic_distance).collect();
    let far = scores
        .iter()
        .filter_map(|c| c.social_distance)
        .fold(f64::NEG_INFINITY, f64::max);
    let socials: Vec<f64> = scores
        .iter()
        .map(|c| match c.social_distance {
            Some(d) => d,
            None if far.is_finite() => far + 1.0,
            None => 0.0,
        })
        .collect();
    min_max(&chars)
        .into_iter()
        .zip(min_max(&socials))
        .map(|(c, s)| c + lambda * s)
        .collect()
}

/// Searches the cluster of a fake device that carries both the required
/// features and the requester's relations.
pub fn lookup_full_mode(
    ctx: &LookupContext<'_>,
    request: &ServiceRequest,
    fake: DeviceId,
    lambda: f64,
) -> Result<LookupResult> {
    let ids = ctx.candidates_around(fake, request.requester)?;
    let scores = ctx.score(request, &ids)?;
    let combined = combined_scores(&scores, lambda);
    let best = (0..scores.len())
        .min_by(|&a, &b| {
            combined[a]
                .total_cmp(&combined[b])
                .then(scores[a].device.cmp(&scores[b].device))
        })
        .expect("candidates are non-empty");
    let selected = scores[best].device;
    Ok(finish(
        LookupMode::EdgesAndAttributes,
        request,
        Some(fake),
        scores,
        selected,
    ))
}
