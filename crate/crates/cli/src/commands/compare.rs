use std::path::{Path, PathBuf};

use cslr_core::models::{nmse, snr_db};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::format::read_grid;
use crate::number::g17;
use crate::output::write_json;

#[derive(Clone, Debug, Default)]
pub struct Tolerances {
    /// Largest allowed pairwise max-abs difference.
    pub max_diff: Option<f64>,
    /// Largest allowed NMSE against the ground truth.
    pub max_nmse: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileScore {
    pub path: String,
    pub nmse: Option<f64>,
    pub snr_db: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairDiff {
    pub a: String,
    pub b: String,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub files: Vec<FileScore>,
    pub pairs: Vec<PairDiff>,
    pub within_tolerance: bool,
}

impl CompareReport {
    /// Plain-text table for the terminal.
    pub fn render(&self) -> String {
        let mut s = String::from("file\tnmse\tsnr_db\n");
        for f in &self.files {
            let cell = |v: Option<f64>| v.map(g17).unwrap_or_else(|| "-".into());
            s.push_str(&format!("{}\t{}\t{}\n", f.path, cell(f.nmse), cell(f.snr_db)));
        }
        s.push_str("\na\tb\tmax_abs_diff\n");
        for p in &self.pairs {
            s.push_str(&format!("{}\t{}\t{}\n", p.a, p.b, g17(p.max_abs_diff)));
        }
        s
    }
}

pub fn compare(files: &[PathBuf], truth: Option<&Path>, tol: &Tolerances) -> CliResult<CompareReport> {
    if files.len() < 2 {
        return Err(CliError::config("compare needs at least two grids"));
    }
    let grids = files.iter().map(|p| read_grid(p)).collect::<CliResult<Vec<_>>>()?;
    let truth = truth.map(read_grid).transpose()?;
    let domain = grids[0].domain();
    let mismatch = |what: String| CliError::data(format!("{what} is on a different box than {}", files[0].display()));
    for (g, p) in grids.iter().zip(files) {
        if g.domain() != domain {
            return Err(mismatch(p.display().to_string()));
        }
    }
    if truth.as_ref().is_some_and(|t| t.domain() != domain) {
        return Err(mismatch("the ground truth".into()));
    }
    let mut ok = true;
    let mut scores = Vec::new();
    for (g, p) in grids.iter().zip(files) {
        let e = match &truth {
            Some(t) => Some(nmse(g, t).map_err(|e| CliError::data(e.to_string()))?),
            None => None,
        };
        if let (Some(limit), Some(e)) = (tol.max_nmse, e) {
            ok &= e <= limit;
        }
        scores.push(FileScore {
            path: p.display().to_string(),
            nmse: e,
            snr_db: e.map(snr_db).filter(|v| v.is_finite()),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..grids.len() {
        for j in i + 1..grids.len() {
            let d = grids[i]
                .max_abs_diff(&grids[j])
                .map_err(|e| CliError::data(e.to_string()))?;
            if let Some(limit) = tol.max_diff {
                ok &= d <= limit;
            }
            pairs.push(PairDiff {
                a: files[i].display().to_string(),
                b: files[j].display().to_string(),
                max_abs_diff: d,
            });
        }
    }
    Ok(CompareReport {
        files: scores,
        pairs,
        within_tolerance: ok,
    })
}

/// Prints the report, optionally saves it as JSON, and fails when a
/// tolerance is exceeded.
pub fn run(files: &[PathBuf], truth: Option<&Path>, tol: &Tolerances, out: Option<&Path>) -> CliResult<CompareReport> {
    let report = compare(files, truth, tol)?;
    print!("{}", report.render());
    if let Some(dir) = out {
        crate::output::create_dir(dir)?;
        write_json(&dir.join("compare.json"), &report)?;
    }
    if !report.within_tolerance {
        return Err(CliError::tolerance("differences exceed the supplied tolerances"));
    }
    Ok(report)
}
