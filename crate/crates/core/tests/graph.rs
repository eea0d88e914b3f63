use proptest::prelude::*;

use siot_core::graph::{
    build_sfor_edges, ingest_catalog, inject_fake_device, remove_device, sample_subnetwork,
    synthesize_catalog, write_devices, write_friendships, DeviceId, DeviceRecord, FeatureEncoding,
    Mobility, OwnerSocialNetwork, PowerSupply, SampleFilter, SynthConfig, Visibility,
};

fn catalog_strategy() -> impl Strategy<Value = (Vec<DeviceRecord>, Vec<(u64, u64)>)> {
    let device = (
        proptest::option::of(0u64..8),
        0usize..5,
        0usize..3,
        any::<bool>(),
        any::<bool>(),
    );
    (
        proptest::collection::vec(device, 1..40),
        proptest::collection::vec((0u64..8, 0u64..8), 0..20),
    )
        .prop_map(|(rows, pairs)| {
            let catalog: Vec<DeviceRecord> = rows
                .into_iter()
                .enumerate()
                .map(|(i, (owner, t, b, mobile, mains))| DeviceRecord {
                    device_id: DeviceId(i as u64 * 3 + 1),
                    owner_id: owner,
                    visibility: if owner.is_some() {
                        Visibility::Private
                    } else {
                        Visibility::Public
                    },
                    device_type: format!("type{t}"),
                    brand: format!("brand{b}"),
                    mobility: if mobile {
                        Mobility::Mobile
                    } else {
                        Mobility::Static
                    },
                    power_supply: if mains {
                        PowerSupply::Mains
                    } else {
                        PowerSupply::Battery
                    },
                })
                .collect();
            (catalog, pairs)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sfor_edges_match_pairwise_rule((catalog, pairs) in catalog_strategy()) {
        let mut owners = OwnerSocialNetwork::new();
        for (a, b) in pairs {
            if a != b {
                owners.insert(a, b).unwrap();
            }
        }
        let g = build_sfor_edges(&catalog, &owners).unwrap();
        let mut expected = 0;
        for (i, x) in catalog.iter().enumerate() {
            for y in &catalog[i + 1..] {
                let linked = match (x.owner_id, y.owner_id) {
                    (Some(a), Some(b)) => a == b || owners.are_friends(a, b),
                    _ => false,
                };
                prop_assert_eq!(g.edge(x.device_id, y.device_id).is_some(), linked);
                expected += usize::from(linked);
            }
        }
        prop_assert_eq!(g.edge_count(), expected);
        for e in g.edges() {
            prop_assert_eq!(e.2.weight, 1.0);
        }
    }

    #[test]
    fn encoding_is_one_hot_and_lexicographic((catalog, _) in catalog_strategy()) {
        let enc = FeatureEncoding::encode(&catalog).unwrap();
        for d in &catalog {
            let row = enc.row_of(d.device_id).unwrap();
            prop_assert_eq!(row.iter().sum::<f64>(), 4.0);
            let values = d.attributes();
            let raw = [&values.device_type, &values.brand, &values.mobility, &values.power_supply];
            for (b, vocab) in enc.vocabularies().iter().enumerate() {
                let mut sorted = vocab.values.clone();
                sorted.sort();
                sorted.dedup();
                prop_assert_eq!(&sorted, &vocab.values);
                let pos = vocab.values.iter().position(|v| v == raw[b]).unwrap();
                prop_assert_eq!(row[enc.block(b).start + pos], 1.0);
            }
            prop_assert_eq!(enc.encode_values(&values).unwrap(), row.to_vec());
        }
    }

    #[test]
    fn fake_round_trip((catalog, _) in catalog_strategy(), copy in any::<bool>()) {
        let g = build_sfor_edges(&catalog, &OwnerSocialNetwork::new()).unwrap();
        let enc = FeatureEncoding::encode(&catalog).unwrap();
        let features = enc.row(0).to_vec();
        let source = copy.then(|| catalog[0].device_id);
        let (g2, e2, fake) = inject_fake_device(&g, &enc, &features, source).unwrap();
        prop_assert_eq!(g2.node_count(), g.node_count() + 1);
        if let Some(s) = source {
            let si = g.require_index(s).unwrap();
            prop_assert_eq!(g2.degree(g2.require_index(fake).unwrap()), g.degree(si));
        }
        let (g3, e3) = remove_device(&g2, &e2, fake).unwrap();
        prop_assert_eq!(g3, g);
        prop_assert_eq!(e3, enc);
    }
}

#[test]
fn synthetic_catalog_round_trips_through_csv() {
    let cfg = SynthConfig {
        n_private: 300,
        n_public: 40,
        n_owners: 60,
        friendship_prob: 0.05,
        seed: 4,
        ..SynthConfig::default()
    };
    let (catalog, owners) = synthesize_catalog(&cfg).unwrap();
    assert_eq!(catalog.len(), 340);
    let mut dev = Vec::new();
    write_devices(&mut dev, &catalog).unwrap();
    let mut fr = Vec::new();
    write_friendships(&mut fr, &owners).unwrap();
    let (c2, o2) = ingest_catalog(dev.as_slice(), fr.as_slice()).unwrap();
    assert_eq!(c2, catalog);
    assert_eq!(o2, owners);
}

#[test]
fn sampling_is_uniform_over_eligible_devices() {
    let cfg = SynthConfig {
        n_private: 60,
        n_public: 20,
        n_owners: 10,
        vocab_sizes: [3, 3, 2, 2],
        friendship_prob: 0.2,
        seed: 2,
    };
    let (catalog, owners) = synthesize_catalog(&cfg).unwrap();
    let filter = SampleFilter::default();
    let eligible: Vec<DeviceId> = catalog
        .iter()
        .filter(|d| filter.accepts(d))
        .map(|d| d.device_id)
        .collect();
    let draws = 4000;
    let take = 10;
    let mut hits = std::collections::HashMap::new();
    for s in 0..draws {
        let (sample, net) = sample_subnetwork(&catalog, &owners, take, filter, s).unwrap();
        assert!(sample.windows(2).all(|w| w[0].device_id < w[1].device_id));
        for d in &sample {
            assert!(filter.accepts(d));
            *hits.entry(d.device_id).or_insert(0usize) += 1;
        }
        let kept: std::collections::HashSet<u64> =
            sample.iter().filter_map(|d| d.owner_id).collect();
        assert!(net
            .iter()
            .all(|(a, b)| kept.contains(&a) && kept.contains(&b)));
    }
    // inclusion probability take / |eligible| for every device; 5 sigma band
    let p = take as f64 / eligible.len() as f64;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for id in eligible {
        let h = *hits.get(&id).unwrap_or(&0) as f64;
        assert!((h - draws as f64 * p).abs() < 5.0 * sigma, "{id}: {h}");
    }
}
