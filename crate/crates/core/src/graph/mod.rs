//! Device catalog, social graph construction and graph utilities.
//!
//! Devices are linked by SFOR (social friendship and ownership) relations:
//! two private devices are related when they share an owner or when their
//! owners are friends. Public devices have no owner and stay isolated unless
//! generic edges are supplied.

mod catalog;
mod features;
mod paths;
mod social;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{
    ingest_catalog, read_devices, read_friendships, sample_subnetwork, synthesize_catalog,
    write_devices, write_friendships, SampleFilter, SynthConfig,
};
pub use features::{AttributeValues, AttributeVocabulary, FeatureEncoding, ATTRIBUTE_NAMES};
pub use paths::{dijkstra, hop_distances, shortest_path_distance};
pub use social::{
    build_sfor_edges, inject_fake_device, remove_device, CanonicalEdge, CanonicalGraph, Edge,
    RelationTag, SocialGraph,
};

pub type OwnerId = u64;

/// Identity of one IoT device.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct DeviceId(pub u64);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for DeviceId {
    fn from(v: u64) -> Self {
        DeviceId(v)
    }
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("invalid ", stringify!($name), " {:?}"),
                        other
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum!(
    /// Whether a device belongs to a private user or a public service.
    Visibility { Private => "private", Public => "public" }
);
string_enum!(Mobility { Static => "static", Mobile => "mobile" });
string_enum!(PowerSupply { Battery => "battery", Mains => "mains" });

/// One row of the device catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub device_id: DeviceId,
    pub owner_id: Option<OwnerId>,
    pub visibility: Visibility,
    pub device_type: String,
    pub brand: String,
    pub mobility: Mobility,
    pub power_supply: PowerSupply,
}

impl DeviceRecord {
    /// Checks the owner/visibility pairing.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match (self.visibility, self.owner_id) {
            (Visibility::Private, None) => Err("private device without owner".into()),
            (Visibility::Public, Some(_)) => Err("public device with owner".into()),
            _ if self.device_type.is_empty() || self.brand.is_empty() => {
                Err("empty categorical attribute".into())
            }
            _ => Ok(()),
        }
    }

    pub fn attributes(&self) -> AttributeValues {
        AttributeValues {
            device_type: self.device_type.clone(),
            brand: self.brand.clone(),
            mobility: self.mobility.as_str().to_string(),
            power_supply: self.power_supply.as_str().to_string(),
        }
    }
}

/// Friendships between device owners, stored as normalized `(low, high)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerSocialNetwork {
    friendships: BTreeSet<(OwnerId, OwnerId)>,
}

impl OwnerSocialNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a friendship. Self-friendships are rejected; re-adding is a no-op.
    pub fn insert(&mut self, a: OwnerId, b: OwnerId) -> Result<bool> {
        if a == b {
            return Err(Error::InvalidConfig(format!("owner {a} befriends itself")));
        }
        Ok(self.friendships.insert((a.min(b), a.max(b))))
    }

    pub fn are_friends(&self, a: OwnerId, b: OwnerId) -> bool {
        self.friendships.contains(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.friendships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.friendships.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (OwnerId, OwnerId)> + '_ {
        self.friendships.iter().copied()
    }

    /// Keeps only friendships whose endpoints both satisfy `keep`.
    pub fn restricted_to(&self, keep: impl Fn(OwnerId) -> bool) -> Self {
        Self {
            friendships: self
                .friendships
                .iter()
                .copied()
                .filter(|&(a, b)| keep(a) && keep(b))
                .collect(),
        }
    }
}

impl FromIterator<(OwnerId, OwnerId)> for OwnerSocialNetwork {
    fn from_iter<I: IntoIterator<Item = (OwnerId, OwnerId)>>(iter: I) -> Self {
        Self {
            friendships: iter
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        }
    }
}

/// A lookup query: who is asking, and which characteristics the provider must have.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub requester: DeviceId,
    pub required_features: Vec<f64>,
}

impl ServiceRequest {
    /// Builds a request after checking it against the graph and the encoding.
    pub fn new(
        graph: &SocialGraph,
        encoding: &FeatureEncoding,
        requester: DeviceId,
        required_features: Vec<f64>,
    ) -> Result<Self> {
        if !graph.contains(requester) {
            return Err(Error::UnknownDevice(requester));
        }
        encoding.check_features(&required_features)?;
        Ok(Self {
            requester,
            required_features,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_text_round_trip() {
        for v in [Visibility::Private, Visibility::Public] {
            assert_eq!(v.as_str().parse::<Visibility>().unwrap(), v);
        }
        assert_eq!("mains".parse::<PowerSupply>().unwrap(), PowerSupply::Mains);
        assert!("flying".parse::<Mobility>().is_err());
    }

    #[test]
    fn friendships_are_symmetric() {
        let mut net = OwnerSocialNetwork::new();
        assert!(net.insert(3, 1).unwrap());
        assert!(!net.insert(1, 3).unwrap());
        assert!(net.are_friends(1, 3) && net.are_friends(3, 1));
        assert!(net.insert(2, 2).is_err());
        assert_eq!(net.len(), 1);
    }

    #[test]
    fn owner_visibility_pairing() {
        let mut rec = DeviceRecord {
            device_id: DeviceId(1),
            owner_id: None,
            visibility: Visibility::Private,
            device_type: "sensor".into(),
            brand: "acme".into(),
            mobility: Mobility::Static,
            power_supply: PowerSupply::Battery,
        };
        assert!(rec.validate().is_err());
        rec.owner_id = Some(4);
        assert!(rec.validate().is_ok());
        rec.visibility = Visibility::Public;
        assert!(rec.validate().is_err());
    }
}
