use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{DeviceId, DeviceRecord, FeatureEncoding, OwnerId, OwnerSocialNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationTag {
    Sfor,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub relation: RelationTag,
    pub weight: f64,
}

impl Edge {
    pub fn sfor() -> Self {
        Self {
            relation: RelationTag::Sfor,
            weight: 1.0,
        }
    }
}

/// Undirected, typed-edge graph over devices.
///
/// Nodes are kept sorted by id; node `i` of the graph is row `i` of the
/// matching [`FeatureEncoding`]. Adjacency lists are sorted by neighbor index.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    node_ids: Vec<DeviceId>,
    index: HashMap<DeviceId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: BTreeMap<(DeviceId, DeviceId), Edge>,
}

impl SocialGraph {
    /// Builds a graph from a node set and an edge list.
    ///
    /// Rejects self-loops, duplicate edges (in either orientation), unknown
    /// endpoints and non-positive weights.
    pub fn from_parts(
        nodes: impl IntoIterator<Item = DeviceId>,
        edges: impl IntoIterator<Item = (DeviceId, DeviceId, Edge)>,
    ) -> Result<Self> {
        let mut node_ids: Vec<DeviceId> = nodes.into_iter().collect();
        node_ids.sort_unstable();
        if let Some(w) = node_ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateDeviceId(w[0]));
        }
        let index: HashMap<DeviceId, usize> = node_ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, i))
            .collect();
        let mut canonical = BTreeMap::new();
        for (u, v, edge) in edges {
            if u == v {
                return Err(Error::InvalidConfig(format!("self-loop on device {u}")));
            }
            for id in [u, v] {
                if !index.contains_key(&id) {
                    return Err(Error::UnknownDevice(id));
                }
            }
            if !(edge.weight > 0.0 && edge.weight.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "edge {u}-{v} has non-positive weight {}",
                    edge.weight
                )));
            }
            if canonical.insert((u.min(v), u.max(v)), edge).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate edge {u}-{v}")));
            }
        }
        let mut adjacency = vec![Vec::new(); node_ids.len()];
        for (&(u, v), edge) in &canonical {
            let (a, b) = (index[&u], index[&v]);
            adjacency[a].push((b, edge.weight));
            adjacency[b].push((a, edge.weight));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|&(n, _)| n);
        }
        Ok(Self {
            node_ids,
            index,
            adjacency,
            edges: canonical,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[DeviceId] {
        &self.node_ids
    }

    pub fn contains(&self, id: DeviceId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn index_of(&self, id: DeviceId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn require_index(&self, id: DeviceId) -> Result<usize> {
        self.index_of(id).ok_or(Error::UnknownDevice(id))
    }

    pub fn id_at(&self, index: usize) -> DeviceId {
        self.node_ids[index]
    }

    /// Neighbors of node `index` as `(neighbor index, weight)`, sorted by index.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    pub fn has_edge_between(&self, a: usize, b: usize) -> bool {
        self.adjacency[a]
            .binary_search_by_key(&b, |&(n, _)| n)
            .is_ok()
    }

    pub fn edge(&self, u: DeviceId, v: DeviceId) -> Option<&Edge> {
        self.edges.get(&(u.min(v), u.max(v)))
    }

    /// Canonical `(low, high)` edges in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (DeviceId, DeviceId, Edge)> + '_ {
        self.edges.iter().map(|(&(u, v), &e)| (u, v, e))
    }

    pub fn max_id(&self) -> Option<DeviceId> {
        self.node_ids.last().copied()
    }

    pub fn to_canonical(&self) -> CanonicalGraph {
        CanonicalGraph {
            nodes: self.node_ids.clone(),
            edges: self
                .edges()
                .map(|(u, v, e)| CanonicalEdge {
                    u,
                    v,
                    relation: e.relation,
                    weight: e.weight,
                })
                .collect(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_canonical()).expect("graph serialization is infallible")
    }

    pub fn from_canonical(canonical: &CanonicalGraph) -> Result<Self> {
        Self::from_parts(
            canonical.nodes.iter().copied(),
            canonical.edges.iter().map(|e| {
                (
                    e.u,
                    e.v,
                    Edge {
                        relation: e.relation,
                        weight: e.weight,
                    },
                )
            }),
        )
    }
}

/// Serialized graph form: sorted node list and sorted `(low, high)` edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalGraph {
    pub nodes: Vec<DeviceId>,
    pub edges: Vec<CanonicalEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalEdge {
    pub u: DeviceId,
    pub v: DeviceId,
    pub relation: RelationTag,
    pub weight: f64,
}

/// Builds the SFOR graph: devices are linked when they share an owner or when
/// their owners are friends. Ownerless devices stay isolated.
pub fn build_sfor_edges(
    catalog: &[DeviceRecord],
    owners: &OwnerSocialNetwork,
) -> Result<SocialGraph> {
    let mut by_owner: BTreeMap<OwnerId, Vec<DeviceId>> = BTreeMap::new();
    for d in catalog {
        if let Some(o) = d.owner_id {
            by_owner.entry(o).or_default().push(d.device_id);
        }
    }
    let mut edges = Vec::new();
    for devices in by_owner.values() {
        for (i, &u) in devices.iter().enumerate() {
            for &v in &devices[i + 1..] {
                edges.push((u, v, Edge::sfor()));
            }
        }
    }
    for (a, b) in owners.iter() {
        let (Some(left), Some(right)) = (by_owner.get(&a), by_owner.get(&b)) else {
            continue;
        };
        for &u in left {
            for &v in right {
                edges.push((u, v, Edge::sfor()));
            }
        }
    }
    SocialGraph::from_parts(catalog.iter().map(|d| d.device_id), edges)
}

/// Adds a transient device carrying `features`.
///
/// The new id is one past the largest existing id, so it lands at the end of
/// the node order. With `copy_relations_of`, the fake device receives a copy of
/// every edge of that device; otherwise it is isolated. Inputs are not touched.
pub fn inject_fake_device(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    features: &[f64],
    copy_relations_of: Option<DeviceId>,
) -> Result<(SocialGraph, FeatureEncoding, DeviceId)> {
    encoding.check_features(features)?;
    let fake_id = graph.max_id().map_or(DeviceId(0), |m| DeviceId(m.0 + 1));
    let mut edges: Vec<_> = graph.edges().collect();
    if let Some(source) = copy_relations_of {
        let idx = graph.require_index(source)?;
        for &(n, _) in graph.neighbors(idx) {
            let neighbor = graph.id_at(n);
            let edge = *graph
                .edge(source, neighbor)
                .expect("adjacency mirrors edge map");
            edges.push((fake_id, neighbor, edge));
        }
    }
    let nodes = graph
        .node_ids()
        .iter()
        .copied()
        .chain(std::iter::once(fake_id));
    let augmented = SocialGraph::from_parts(nodes, edges)?;
    let encoding = encoding.with_device(fake_id, features)?;
    Ok((augmented, encoding, fake_id))
}

/// Removes a device and its edges from a graph/encoding pair.
pub fn remove_device(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    id: DeviceId,
) -> Result<(SocialGraph, FeatureEncoding)> {
    graph.require_index(id)?;
    let reduced = SocialGraph::from_parts(
        graph.node_ids().iter().copied().filter(|&n| n != id),
        graph.edges().filter(|&(u, v, _)| u != id && v != id),
    )?;
    Ok((reduced, encoding.without_device(id)?))
}
