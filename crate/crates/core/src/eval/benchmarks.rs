use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{
    build_sfor_edges, DeviceId, DeviceRecord, FeatureEncoding, Mobility, OwnerSocialNetwork,
    PowerSupply, SocialGraph, Visibility,
};

/// Two disjoint cliques (one owner each). A device's type equals its clique
/// index with probability `type_agreement` and is the other clique's type
/// otherwise; brand and power supply are drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCliqueConfig {
    pub clique_size: usize,
    pub brands: usize,
    pub type_agreement: f64,
    pub seed: u64,
}

impl Default for TwoCliqueConfig {
    fn default() -> Self {
        Self {
            clique_size: 20,
            brands: 4,
            type_agreement: 1.0,
            seed: 0,
        }
    }
}

pub fn two_clique_catalog(config: &TwoCliqueConfig) -> Vec<DeviceRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..2 * config.clique_size)
        .map(|i| {
            let clique = i / config.clique_size;
            let ty = if rng.random::<f64>() < config.type_agreement {
                clique
            } else {
                1 - clique
            };
            DeviceRecord {
                device_id: DeviceId(i as u64),
                owner_id: Some(clique as u64),
                visibility: Visibility::Private,
                device_type: format!("type{ty:02}"),
                brand: format!("brand{:02}", rng.random_range(0..config.brands.max(1))),
                mobility: Mobility::Static,
                power_supply: if rng.random::<bool>() {
                    PowerSupply::Battery
                } else {
                    PowerSupply::Mains
                },
            }
        })
        .collect()
}

pub fn two_clique_benchmark(config: &TwoCliqueConfig) -> Result<(SocialGraph, FeatureEncoding)> {
    let catalog = two_clique_catalog(config);
    let graph = build_sfor_edges(&catalog, &OwnerSocialNetwork::new())?;
    Ok((graph, FeatureEncoding::encode(&catalog)?))
}
