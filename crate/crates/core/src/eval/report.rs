use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::protocol::AggregateReport;
use super::sweep::SweepRow;
use crate::embedding::EmbeddingMode;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "mode,metric,mean,std,trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Serializes a report. JSON carries everything including per-trial data;
/// CSV has one row per (mode, metric).
pub fn emit_report(report: &AggregateReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER.split(','))?;
            for m in &report.modes {
                for s in &m.metrics {
                    w.write_record([
                        m.mode.as_str(),
                        &s.metric,
                        &opt(s.mean),
                        &opt(s.std),
                        &s.trials.to_string(),
                    ])?;
                }
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

pub fn parse_report_json(bytes: &[u8]) -> Result<AggregateReport> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Sweep table: one row per dimension, one accuracy column per mode.
pub fn emit_sweep(rows: &[SweepRow], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let modes: Vec<EmbeddingMode> = rows
                .first()
                .map(|r| r.accuracy.iter().map(|a| a.mode).collect())
                .unwrap_or_default();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["dim".to_string()];
            header.extend(modes.iter().map(|m| m.as_str().to_string()));
            w.write_record(&header)?;
            for r in rows {
                let mut record = vec![r.dim.to_string()];
                record.extend(r.accuracy.iter().map(|a| opt(a.final_accuracy)));
                w.write_record(&record)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}
