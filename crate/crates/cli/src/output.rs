//! Trace CSV, summary JSON and manifest writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use cslr_core::giraf::RecoveryTrace;
use cslr_core::models::snr_db;
use serde::Serialize;

use crate::config::{ExperimentConfig, Seeds, MANIFEST_FORMAT};
use crate::error::{CliError, CliResult};
use crate::number::g17;

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes rows of already formatted fields as CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(g17).unwrap_or_default()
}

/// Per-iteration trace; the `nmse` column is left out without ground truth.
pub fn write_trace(path: &Path, trace: &RecoveryTrace, with_nmse: bool) -> CliResult<()> {
    let mut header = vec!["iter", "eps"];
    if with_nmse {
        header.push("nmse");
    }
    header.extend(["cost", "sigma_min", "sigma_max", "seconds"]);
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.iter.to_string(), g17(r.eps)];
            if with_nmse {
                row.push(opt(r.nmse));
            }
            row.extend([g17(r.cost), opt(r.sigma_min), opt(r.sigma_max), g17(r.seconds)]);
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub p: f64,
    pub iterations: usize,
    pub final_nmse: Option<f64>,
    pub snr_db: Option<f64>,
    pub final_cost: Option<f64>,
    pub final_eps: Option<f64>,
    pub wall_seconds: f64,
    pub filter_seconds: f64,
    pub ls_seconds: f64,
    pub ls_capped: bool,
}

impl Summary {
    pub fn new(algorithm: &str, p: f64, trace: &RecoveryTrace) -> Self {
        let last = trace.records.last();
        let nmse = trace.final_nmse();
        Self {
            algorithm: algorithm.into(),
            p,
            iterations: trace.iterations(),
            final_nmse: nmse,
            snr_db: nmse.map(snr_db).filter(|v| v.is_finite()),
            final_cost: last.map(|r| r.cost),
            final_eps: last.map(|r| r.eps),
            wall_seconds: last.map_or(0.0, |r| r.seconds),
            filter_seconds: last.map_or(0.0, |r| r.filter_seconds),
            ls_seconds: last.map_or(0.0, |r| r.ls_seconds),
            ls_capped: trace.ls_capped,
        }
    }
}

/// Resolved description of a run, itself accepted as a config.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub format: &'static str,
    pub version: u32,
    pub command: &'static str,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    pub files: BTreeMap<&'static str, String>,
}

impl Manifest {
    pub fn new(command: &'static str, config: ExperimentConfig, seeds: Option<Seeds>) -> Self {
        Self {
            format: MANIFEST_FORMAT,
            version: 1,
            command,
            config,
            seeds,
            files: BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cslr_core::giraf::IterRecord;
    use cslr_core::grids::{ComplexGrid, IndexBox};

    fn trace() -> RecoveryTrace {
        let rec = |iter, nmse| IterRecord {
            iter,
            eps: 0.5,
            nmse,
            cost: 1.0 / 3.0,
            sigma_min: None,
            sigma_max: Some(2.0),
            seconds: 0.0,
            filter_seconds: 0.0,
            ls_seconds: 0.0,
        };
        RecoveryTrace {
            records: vec![rec(0, Some(1.0)), rec(1, Some(1e-5))],
            x: ComplexGrid::zeros(IndexBox::centered(&[3]).unwrap()),
            ls_capped: false,
        }
    }

    #[test]
    fn trace_csv_has_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace(&path, &trace(), true).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iter,eps,nmse,cost,sigma_min,sigma_max,seconds"));
        assert_eq!(lines.next(), Some("0,0.5,1,0.33333333333333331,,2,0"));
        write_trace(&path, &trace(), false).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("iter,eps,cost,sigma_min,sigma_max,seconds\n"));
    }

    #[test]
    fn summary_reports_snr() {
        let s = Summary::new("giraf", 0.0, &trace());
        assert_eq!(s.iterations, 1);
        assert!((s.snr_db.unwrap() - 50.0).abs() < 1e-9);
    }
}
