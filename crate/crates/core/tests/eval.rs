use siot_core::embedding::EmbeddingMode;
use siot_core::eval::{
    emit_report, parse_report_json, run_monte_carlo, ProtocolConfig, ReportFormat, CSV_HEADER,
    METRICS,
};
use siot_core::graph::{synthesize_catalog, SynthConfig};

fn toy_config(trials: usize, threads: usize) -> ProtocolConfig {
    let mut cfg = ProtocolConfig {
        sample_size: 50,
        trials,
        master_seed: 17,
        queries_per_trial: 2,
        threads,
        ..ProtocolConfig::default()
    };
    for m in &mut cfg.modes {
        m.embed.dim = 8;
        m.embed.epochs = 3;
        m.walk.walks_per_node = 2;
        m.walk.walk_length = 8;
    }
    cfg
}

fn toy_population() -> (
    Vec<siot_core::graph::DeviceRecord>,
    siot_core::graph::OwnerSocialNetwork,
) {
    synthesize_catalog(&SynthConfig {
        n_private: 400,
        n_public: 50,
        n_owners: 40,
        friendship_prob: 0.05,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn aggregate_means_are_recomputable() {
    let (catalog, owners) = toy_population();
    let report = run_monte_carlo(&catalog, &owners, &toy_config(10, 1)).unwrap();
    assert_eq!(report.trial_reports.len(), 10 * 3);
    for summary in &report.modes {
        let trials: Vec<_> = report
            .trial_reports
            .iter()
            .filter(|t| t.mode == summary.mode)
            .collect();
        assert_eq!(
            summary.trials_ok,
            trials.iter().filter(|t| t.succeeded()).count()
        );
        assert_eq!(summary.trials_ok + summary.trials_failed, 10);
        for m in &summary.metrics {
            let values: Vec<f64> = trials.iter().filter_map(|t| t.metric(&m.metric)).collect();
            assert_eq!(m.trials, values.len());
            if values.is_empty() {
                assert!(m.mean.is_none());
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            assert!((m.mean.unwrap() - mean).abs() < 1e-9, "{}", m.metric);
            let std = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64)
                    .sqrt()
            };
            assert!((m.std.unwrap() - std).abs() < 1e-9, "{}", m.metric);
        }
    }
    for t in &report.trial_reports {
        for pct in [t.relation_similarity_pct, t.characteristic_similarity_pct]
            .into_iter()
            .flatten()
        {
            assert!((0.0..=100.0).contains(&pct));
        }
        if let Some(c) = t.candidate_count {
            assert!(c <= 50.0);
        }
        assert!(t.wall_time.is_none());
    }
}

#[test]
fn reports_are_reproducible_and_round_trip() {
    let (catalog, owners) = toy_population();
    let a = run_monte_carlo(&catalog, &owners, &toy_config(2, 1)).unwrap();
    let b = run_monte_carlo(&catalog, &owners, &toy_config(2, 1)).unwrap();
    let json = emit_report(&a, ReportFormat::Json).unwrap();
    assert_eq!(json, emit_report(&b, ReportFormat::Json).unwrap());
    assert_eq!(parse_report_json(&json).unwrap(), a);

    let csv = String::from_utf8(emit_report(&a, ReportFormat::Csv).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(lines.count(), EmbeddingMode::ALL.len() * METRICS.len());
}

#[test]
fn trial_results_do_not_depend_on_trial_count() {
    let (catalog, owners) = toy_population();
    let short = run_monte_carlo(&catalog, &owners, &toy_config(1, 1)).unwrap();
    let long = run_monte_carlo(&catalog, &owners, &toy_config(3, 1)).unwrap();
    let first: Vec<_> = long
        .trial_reports
        .iter()
        .filter(|t| t.trial == 0)
        .cloned()
        .collect();
    assert_eq!(short.trial_reports, first);
}
