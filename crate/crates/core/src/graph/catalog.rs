use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    DeviceId, DeviceRecord, Mobility, OwnerId, OwnerSocialNetwork, PowerSupply, Visibility,
};
use crate::error::{Error, Result};

const DEVICE_HEADER: [&str; 7] = [
    "device_id",
    "owner_id",
    "visibility",
    "device_type",
    "brand",
    "mobility",
    "power_supply",
];
const FRIENDSHIP_HEADER: [&str; 2] = ["owner_a", "owner_b"];

fn malformed(line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        line,
        reason: reason.into(),
    }
}

fn check_header(header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(malformed(
            1,
            format!("expected header {:?}, got {:?}", expected.join(","), header),
        ));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(line: u64, name: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| malformed(line, format!("{name}: {e}")))
}

/// Reads the device CSV. Rows are returned in file order.
pub fn read_devices<R: Read>(source: R) -> Result<Vec<DeviceRecord>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(reader.headers()?, &DEVICE_HEADER)?;

    let mut seen = HashSet::new();
    let mut catalog = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != DEVICE_HEADER.len() {
            return Err(malformed(
                line,
                format!(
                    "expected {} columns, got {}",
                    DEVICE_HEADER.len(),
                    row.len()
                ),
            ));
        }
        let owner_raw = row[1].trim();
        let record = DeviceRecord {
            device_id: DeviceId(parse_field(line, "device_id", &row[0])?),
            owner_id: if owner_raw.is_empty() {
                None
            } else {
                Some(parse_field(line, "owner_id", owner_raw)?)
            },
            visibility: parse_field(line, "visibility", &row[2])?,
            device_type: row[3].trim().to_string(),
            brand: row[4].trim().to_string(),
            mobility: parse_field(line, "mobility", &row[5])?,
            power_supply: parse_field(line, "power_supply", &row[6])?,
        };
        record.validate().map_err(|e| malformed(line, e))?;
        if !seen.insert(record.device_id) {
            return Err(Error::DuplicateDeviceId(record.device_id));
        }
        catalog.push(record);
    }
    Ok(catalog)
}

/// Reads the owner friendship CSV; every owner must own a device in `catalog`.
pub fn read_friendships<R: Read>(
    source: R,
    catalog: &[DeviceRecord],
) -> Result<OwnerSocialNetwork> {
    let owners: HashSet<OwnerId> = catalog.iter().filter_map(|d| d.owner_id).collect();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    check_header(reader.headers()?, &FRIENDSHIP_HEADER)?;

    let mut network = OwnerSocialNetwork::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            return Err(malformed(
                line,
                format!("expected 2 columns, got {}", row.len()),
            ));
        }
        let a: OwnerId = parse_field(line, "owner_a", &row[0])?;
        let b: OwnerId = parse_field(line, "owner_b", &row[1])?;
        for owner in [a, b] {
            if !owners.contains(&owner) {
                return Err(Error::DanglingOwner(owner));
            }
        }
        if a == b {
            return Err(malformed(line, "owner befriends itself"));
        }
        network.insert(a, b)?;
    }
    Ok(network)
}

/// Reads a device CSV and its friendship CSV.
pub fn ingest_catalog<D: Read, F: Read>(
    devices: D,
    friendships: F,
) -> Result<(Vec<DeviceRecord>, OwnerSocialNetwork)> {
    let catalog = read_devices(devices)?;
    let owners = read_friendships(friendships, &catalog)?;
    Ok((catalog, owners))
}

pub fn write_devices<W: Write>(sink: W, catalog: &[DeviceRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(DEVICE_HEADER)?;
    for d in catalog {
        let owner = d.owner_id.map(|o| o.to_string()).unwrap_or_default();
        writer.write_record([
            d.device_id.to_string().as_str(),
            &owner,
            d.visibility.as_str(),
            &d.device_type,
            &d.brand,
            d.mobility.as_str(),
            d.power_supply.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_friendships<W: Write>(sink: W, owners: &OwnerSocialNetwork) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(FRIENDSHIP_HEADER)?;
    for (a, b) in owners.iter() {
        writer.write_record([a.to_string(), b.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Parameters of the synthetic catalog generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_private: usize,
    pub n_public: usize,
    pub n_owners: usize,
    /// Vocabulary sizes for type, brand, mobility and power supply.
    /// Mobility and power supply accept at most 2 values.
    pub vocab_sizes: [usize; 4],
    pub friendship_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_private: 14_600,
            n_public: 1_616,
            n_owners: 4_000,
            vocab_sizes: [10, 20, 2, 2],
            friendship_prob: 0.01,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_private + self.n_public == 0 {
            return bad("catalog must contain at least one device");
        }
        if self.n_private > 0 && self.n_owners == 0 {
            return bad("private devices need at least one owner");
        }
        if self.vocab_sizes.contains(&0) {
            return bad("vocabulary sizes must be positive");
        }
        if self.vocab_sizes[2] > 2 || self.vocab_sizes[3] > 2 {
            return bad("mobility and power supply have at most 2 values");
        }
        if !(0.0..=1.0).contains(&self.friendship_prob) {
            return bad("friendship probability must lie in [0, 1]");
        }
        Ok(())
    }
}

fn category_names(prefix: &str, count: usize) -> Vec<String> {
    let width = count.saturating_sub(1).to_string().len().max(2);
    (0..count).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Generates a reproducible synthetic catalog.
///
/// Private devices get ids `0..n_private` and uniformly drawn owners, public
/// devices follow. Owner pairs become friends independently with
/// `friendship_prob`; friendships of owners that ended up without devices are
/// dropped so the output always re-ingests cleanly.
pub fn synthesize_catalog(config: &SynthConfig) -> Result<(Vec<DeviceRecord>, OwnerSocialNetwork)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let types = category_names("type", config.vocab_sizes[0]);
    let brands = category_names("brand", config.vocab_sizes[1]);
    let mobilities = [Mobility::Static, Mobility::Mobile];
    let powers = [PowerSupply::Battery, PowerSupply::Mains];

    let total = config.n_private + config.n_public;
    let mut catalog = Vec::with_capacity(total);
    for i in 0..total {
        let private = i < config.n_private;
        let owner_id = private.then(|| rng.random_range(0..config.n_owners as u64));
        catalog.push(DeviceRecord {
            device_id: DeviceId(i as u64),
            owner_id,
            visibility: if private {
                Visibility::Private
            } else {
                Visibility::Public
            },
            device_type: types[rng.random_range(0..types.len())].clone(),
            brand: brands[rng.random_range(0..brands.len())].clone(),
            mobility: mobilities[rng.random_range(0..config.vocab_sizes[2])],
            power_supply: powers[rng.random_range(0..config.vocab_sizes[3])],
        });
    }

    let present: BTreeSet<OwnerId> = catalog.iter().filter_map(|d| d.owner_id).collect();
    let mut owners = OwnerSocialNetwork::new();
    if config.friendship_prob > 0.0 {
        let n = config.n_owners as u64;
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.random::<f64>() < config.friendship_prob
                    && present.contains(&a)
                    && present.contains(&b)
                {
                    owners.insert(a, b)?;
                }
            }
        }
    }
    Ok((catalog, owners))
}

/// Which devices are eligible for Monte Carlo subsampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFilter {
    pub visibility: Option<Visibility>,
    pub mobility: Option<Mobility>,
}

impl Default for SampleFilter {
    /// Private static devices.
    fn default() -> Self {
        Self {
            visibility: Some(Visibility::Private),
            mobility: Some(Mobility::Static),
        }
    }
}

impl SampleFilter {
    pub fn any() -> Self {
        Self {
            visibility: None,
            mobility: None,
        }
    }

    pub fn accepts(&self, d: &DeviceRecord) -> bool {
        self.visibility.is_none_or(|v| v == d.visibility)
            && self.mobility.is_none_or(|m| m == d.mobility)
    }
}

/// Draws `n` eligible devices uniformly without replacement.
///
/// The sample keeps catalog order, and the friendship table is restricted to
/// owners that still own a sampled device.
pub fn sample_subnetwork(
    catalog: &[DeviceRecord],
    owners: &OwnerSocialNetwork,
    n: usize,
    filter: SampleFilter,
    seed: u64,
) -> Result<(Vec<DeviceRecord>, OwnerSocialNetwork)> {
    let eligible: Vec<&DeviceRecord> = catalog.iter().filter(|d| filter.accepts(d)).collect();
    if eligible.len() < n {
        return Err(Error::InsufficientPopulation {
            requested: n,
            available: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, eligible.len(), n).into_vec();
    picked.sort_unstable();
    let sample: Vec<DeviceRecord> = picked.into_iter().map(|i| eligible[i].clone()).collect();
    let kept: HashSet<OwnerId> = sample.iter().filter_map(|d| d.owner_id).collect();
    let owners = owners.restricted_to(|o| kept.contains(&o));
    Ok((sample, owners))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "device_id,owner_id,visibility,device_type,brand,mobility,power_supply\n";

    #[test]
    fn parses_a_private_row() {
        let csv = format!("{HEADER}42,7,private,sensor,acme,static,battery\n");
        let devices = read_devices(csv.as_bytes()).unwrap();
        assert_eq!(
            devices,
            vec![DeviceRecord {
                device_id: DeviceId(42),
                owner_id: Some(7),
                visibility: Visibility::Private,
                device_type: "sensor".into(),
                brand: "acme".into(),
                mobility: Mobility::Static,
                power_supply: PowerSupply::Battery,
            }]
        );
    }

    #[test]
    fn public_rows_have_empty_owner() {
        let csv = format!("{HEADER}3,,public,camera,zeta,mobile,mains\n");
        let devices = read_devices(csv.as_bytes()).unwrap();
        assert_eq!(devices[0].owner_id, None);
        let bad = format!("{HEADER}3,1,public,camera,zeta,mobile,mains\n");
        assert!(matches!(
            read_devices(bad.as_bytes()),
            Err(Error::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_duplicates_and_bad_rows() {
        let dup = format!(
            "{HEADER}42,7,private,sensor,acme,static,battery\n42,8,private,tv,acme,static,mains\n"
        );
        assert!(matches!(
            read_devices(dup.as_bytes()),
            Err(Error::DuplicateDeviceId(DeviceId(42)))
        ));
        let short = format!("{HEADER}42,7,private,sensor,acme,static\n");
        assert!(matches!(
            read_devices(short.as_bytes()),
            Err(Error::MalformedRow { .. })
        ));
        let word = format!("{HEADER}x,7,private,sensor,acme,static,battery\n");
        assert!(matches!(
            read_devices(word.as_bytes()),
            Err(Error::MalformedRow { .. })
        ));
        assert!(read_devices("a,b,c\n".as_bytes()).is_err());
    }

    #[test]
    fn counts_rows_of_a_small_file() {
        let mut devices = String::from(HEADER);
        for i in 0..10 {
            devices.push_str(&format!(
                "{i},{},private,t{},b,static,battery\n",
                i % 4,
                i % 3
            ));
        }
        let friendships = "owner_a,owner_b\n0,1\n3,2\n";
        let (catalog, owners) = ingest_catalog(devices.as_bytes(), friendships.as_bytes()).unwrap();
        assert_eq!(catalog.len(), 10);
        assert_eq!(owners.len(), 2);
        assert!(owners.are_friends(2, 3));
    }

    #[test]
    fn dangling_owner() {
        let devices = format!("{HEADER}1,7,private,sensor,acme,static,battery\n");
        let friendships = "owner_a,owner_b\n7,9\n";
        assert!(matches!(
            ingest_catalog(devices.as_bytes(), friendships.as_bytes()),
            Err(Error::DanglingOwner(9))
        ));
    }

    #[test]
    fn degenerate_synthesis() {
        let cfg = SynthConfig {
            n_private: 1,
            n_public: 0,
            n_owners: 1,
            vocab_sizes: [1, 1, 1, 1],
            friendship_prob: 0.0,
            seed: 0,
        };
        let (catalog, owners) = synthesize_catalog(&cfg).unwrap();
        assert_eq!(catalog.len(), 1);
        assert_eq!(catalog[0].visibility, Visibility::Private);
        assert!(owners.is_empty());
    }

    #[test]
    fn synthesis_is_reproducible_and_reingestable() {
        let cfg = SynthConfig {
            n_private: 300,
            n_public: 40,
            n_owners: 90,
            friendship_prob: 0.05,
            seed: 9,
            ..SynthConfig::default()
        };
        let render = || {
            let (catalog, owners) = synthesize_catalog(&cfg).unwrap();
            let (mut d, mut f) = (Vec::new(), Vec::new());
            write_devices(&mut d, &catalog).unwrap();
            write_friendships(&mut f, &owners).unwrap();
            (d, f)
        };
        let (d1, f1) = render();
        let (d2, f2) = render();
        assert_eq!(d1, d2);
        assert_eq!(f1, f2);
        let (catalog, owners) = ingest_catalog(d1.as_slice(), f1.as_slice()).unwrap();
        assert_eq!(catalog.len(), 340);
        assert!(!owners.is_empty());
        assert_eq!(catalog.iter().filter(|d| d.owner_id.is_none()).count(), 40);
    }

    #[test]
    fn invalid_synthesis_configs() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig {
                friendship_prob: 1.5,
                ..base.clone()
            },
            SynthConfig {
                vocab_sizes: [3, 3, 3, 2],
                ..base.clone()
            },
            SynthConfig {
                n_owners: 0,
                ..base.clone()
            },
            SynthConfig {
                n_private: 0,
                n_public: 0,
                ..base
            },
        ] {
            assert!(matches!(
                synthesize_catalog(&cfg),
                Err(Error::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn exhaustive_and_insufficient_samples() {
        let cfg = SynthConfig {
            n_private: 80,
            n_public: 10,
            n_owners: 20,
            friendship_prob: 0.2,
            seed: 3,
            ..SynthConfig::default()
        };
        let (catalog, owners) = synthesize_catalog(&cfg).unwrap();
        let eligible = catalog
            .iter()
            .filter(|d| SampleFilter::default().accepts(d))
            .count();
        let (all, _) =
            sample_subnetwork(&catalog, &owners, eligible, SampleFilter::default(), 1).unwrap();
        assert_eq!(all.len(), eligible);
        assert!(all
            .iter()
            .all(|d| d.visibility == Visibility::Private && d.mobility == Mobility::Static));
        assert!(matches!(
            sample_subnetwork(&catalog, &owners, eligible + 1, SampleFilter::default(), 1),
            Err(Error::InsufficientPopulation { .. })
        ));
    }
}
