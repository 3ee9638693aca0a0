//! Trace CSV, bound-report JSON and gnuplot data files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{BoundReport, CheckSuite, Sense};

/// Fixed CSV column order; absent values are empty fields.
pub const CSV_COLUMNS: [&str; 10] =
    ["k", "fpr", "dist_sq", "obj_err", "obj_err_ergodic", "feas_gap", "bound_fpr", "bound_obj_lo", "bound_obj_hi", "bound_feas"];

/// One iteration in the fixed schema.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub fpr: Option<f64>,
    pub dist_sq: Option<f64>,
    pub obj_err: Option<f64>,
    pub obj_err_ergodic: Option<f64>,
    pub feas_gap: Option<f64>,
    pub bound_fpr: Option<f64>,
    pub bound_obj_lo: Option<f64>,
    pub bound_obj_hi: Option<f64>,
    pub bound_feas: Option<f64>,
}

impl TraceRow {
    pub fn new(k: usize) -> Self {
        TraceRow { k, ..Default::default() }
    }

    /// Value of a named column; `None` for unknown names too.
    pub fn get(&self, column: &str) -> Option<f64> {
        match column {
            "k" => Some(self.k as f64),
            "fpr" => self.fpr,
            "dist_sq" => self.dist_sq,
            "obj_err" => self.obj_err,
            "obj_err_ergodic" => self.obj_err_ergodic,
            "feas_gap" => self.feas_gap,
            "bound_fpr" => self.bound_fpr,
            "bound_obj_lo" => self.bound_obj_lo,
            "bound_obj_hi" => self.bound_obj_hi,
            "bound_feas" => self.bound_feas,
            _ => None,
        }
    }
}

/// Result of one experiment or reproduction.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub name: String,
    pub criterion: Option<u8>,
    pub seed: Option<u64>,
    pub suite: CheckSuite,
    pub metrics: BTreeMap<String, f64>,
    pub rows: Vec<TraceRow>,
    /// Set when the run itself failed; the outcome then fails.
    pub error: Option<String>,
    /// The config that produced the outcome, for `run`.
    pub config: Option<serde_json::Value>,
}

impl Outcome {
    pub fn new(name: impl Into<String>) -> Self {
        Outcome { name: name.into(), ..Default::default() }
    }

    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        Outcome { name: name.into(), error: Some(err.to_string()), ..Default::default() }
    }

    /// No error, at least one check, and every check passes.
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.suite.reports.is_empty() && self.suite.passed()
    }

    pub fn add(&mut self, r: BoundReport) {
        self.suite.add(r);
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Keep only checks whose name starts with one of `prefixes`.
    pub fn filter_checks(&mut self, prefixes: &[String]) {
        if !prefixes.is_empty() {
            self.suite.reports.retain(|r| prefixes.iter().any(|p| r.name.starts_with(p.as_str())));
        }
    }

    pub fn report(&self) -> ReportFile {
        ReportFile {
            name: self.name.clone(),
            pass: self.passed(),
            criterion: self.criterion,
            seed: self.seed,
            error: self.error.clone(),
            metrics: self.metrics.clone(),
            checks: self.suite.reports.iter().map(CheckRecord::from_report).collect(),
            config: self.config.clone(),
        }
    }
}

/// Per-check summary: the entry closest to violation (or the first violation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub sense: Sense,
    pub pass: bool,
    pub checked: usize,
    pub k: Option<usize>,
    pub bound: Option<f64>,
    pub measured: Option<f64>,
    pub margin: Option<f64>,
    pub violations: usize,
}

impl CheckRecord {
    fn from_report(r: &BoundReport) -> Self {
        let e = r.first_violation().or_else(|| r.worst());
        let finite = |v: f64| v.is_finite().then_some(v);
        CheckRecord {
            name: r.name.clone(),
            sense: r.sense,
            pass: r.passed(),
            checked: r.entries.len(),
            k: e.map(|e| e.k),
            bound: e.and_then(|e| finite(e.bound)),
            measured: e.and_then(|e| finite(e.measured)),
            margin: e.and_then(|e| finite(e.margin)),
            violations: r.entries.iter().filter(|e| !e.passed()).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Write rows under the fixed header; an empty trace gives the header alone.
pub fn write_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Two whitespace-separated columns `k value` for one series, after a `#` header.
/// Rows without a value are skipped; an existing file is overwritten with a notice.
pub fn emit_plot_data(rows: &[TraceRow], column: &str, path: &Path) -> Result<()> {
    if column == "k" || !CSV_COLUMNS.contains(&column) {
        return Err(Error::InvalidArgument(format!("no column {column}; valid: {}", CSV_COLUMNS[1..].join(", "))));
    }
    if path.exists() {
        log::warn!("overwriting {}", path.display());
    }
    let mut out = String::new();
    out.push_str(&format!("# k {column}\n"));
    for r in rows {
        if let Some(v) = r.get(column) {
            out.push_str(&format!("{} {}\n", r.k, v));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// `trace.csv`, `report.json` and one `<column>.dat` per populated column.
pub fn write_artifacts(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv = dir.join("trace.csv");
    write_trace_csv(&outcome.rows, &csv)?;
    written.push(csv);
    for col in &CSV_COLUMNS[1..] {
        if outcome.rows.iter().any(|r| r.get(col).is_some()) {
            let p = dir.join(format!("{col}.dat"));
            emit_plot_data(&outcome.rows, col, &p)?;
            written.push(p);
        }
    }
    let rep = dir.join("report.json");
    let mut f = fs::File::create(&rep)?;
    let text = serde_json::to_string_pretty(&outcome.report()).map_err(|e| Error::Parse(e.to_string()))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    written.push(rep);
    Ok(written)
}

/// Every `report.json` at or below `dir`, sorted by path.
pub fn collect_reports(dir: &Path) -> Result<Vec<(PathBuf, ReportFile)>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        if entry.file_name() == "report.json" {
            let text = fs::read_to_string(entry.path())?;
            let rep: ReportFile = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", entry.path().display())))?;
            out.push((entry.path().to_path_buf(), rep));
        }
    }
    Ok(out)
}

/// Text table of the reports under `dir` and whether all of them pass.
pub fn summarize(dir: &Path) -> Result<(String, bool)> {
    let reports = collect_reports(dir)?;
    if reports.is_empty() {
        return Err(Error::InvalidArgument(format!("no report.json under {}", dir.display())));
    }
    let mut text = String::new();
    let mut all = true;
    for (_, r) in &reports {
        all &= r.pass;
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        text.push_str(&format!("{} {} ({} checks)", if r.pass { "PASS" } else { "FAIL" }, r.name, r.checks.len()));
        if !failed.is_empty() {
            text.push_str(&format!(" failing: {}", failed.join(", ")));
        }
        if let Some(e) = &r.error {
            text.push_str(&format!(" error: {e}"));
        }
        text.push('\n');
    }
    Ok((text, all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Tolerance;

    fn rows() -> Vec<TraceRow> {
        (0..4).map(|k| TraceRow { fpr: Some(1.0 / (k + 1) as f64), obj_err: (k % 2 == 0).then_some(0.5), ..TraceRow::new(k) }).collect()
    }

    #[test]
    fn csv_round_trip_with_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trace_csv(&rows(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().nth(2).unwrap(), "1,0.5,,,,,,,,");
        assert_eq!(read_trace_csv(&p).unwrap(), rows());
    }

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_trace_csv(&[], &p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap().lines().count(), 1);
        let d = dir.path().join("e.dat");
        emit_plot_data(&[], "fpr", &d).unwrap();
        assert_eq!(fs::read_to_string(&d).unwrap(), "# k fpr\n");
    }

    #[test]
    fn plot_data_matches_csv_column_and_overwrites() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().join("fpr.dat");
        fs::write(&d, "stale").unwrap();
        emit_plot_data(&rows(), "fpr", &d).unwrap();
        let vals: Vec<f64> = fs::read_to_string(&d).unwrap().lines().skip(1).map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(vals, rows().iter().map(|r| r.fpr.unwrap()).collect::<Vec<_>>());
        assert!(emit_plot_data(&rows(), "nope", &d).is_err());
    }

    #[test]
    fn report_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = Outcome::new("demo");
        let mut r = BoundReport::upper("c", Tolerance::DEFAULT);
        r.push(0, 1.0, 0.5);
        o.add(r);
        o.rows = rows();
        write_artifacts(&o, &dir.path().join("demo")).unwrap();
        let (text, ok) = summarize(dir.path()).unwrap();
        assert!(ok && text.starts_with("PASS demo"));
        let rep = &collect_reports(dir.path()).unwrap()[0].1;
        assert_eq!((rep.checks[0].bound, rep.checks[0].measured, rep.checks[0].margin), (Some(1.0), Some(0.5), Some(0.5)));
        assert!(!Outcome::new("empty").passed());
    }
}
