//! Monte Carlo evaluation: repeated subsampling, training, clustering and
//! lookup, with per-trial metrics aggregated into a report.

mod benchmarks;
mod metrics;
mod protocol;
mod report;
mod sweep;

pub use benchmarks::{two_clique_benchmark, two_clique_catalog, TwoCliqueConfig};
pub use metrics::{
    characteristic_similarity, epochs_to_plateau, epochs_to_threshold, mean_std, plateau_level,
    relation_similarity,
};
pub use protocol::{
    aggregate, random_request, run_monte_carlo, trial_seed, AggregateReport, MetricSummary,
    ModeSettings, ModeSummary, ProtocolConfig, TrialReport, METRICS,
};
pub use report::{emit_report, emit_sweep, parse_report_json, ReportFormat, CSV_HEADER};
pub use sweep::{dimension_sweep, dimension_sweep_on, ModeAccuracy, SweepConfig, SweepRow};
