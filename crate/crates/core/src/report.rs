//! Per-iteration comparisons of a measured quantity against a bound.

use serde::{Deserialize, Serialize};

/// Inequality checks pass with `abs + rel * max(|bound|, |measured|)` slack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-9, rel: 1e-12 };

    pub fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 1e-12 }
    }

    pub fn slack(&self, bound: f64, measured: f64) -> f64 {
        let scale = bound.abs().max(measured.abs());
        self.abs + self.rel * if scale.is_finite() { scale } else { 0.0 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Which side of the bound the measurement must stay on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// measured <= bound
    Upper,
    /// measured >= bound
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub k: usize,
    pub bound: f64,
    pub measured: f64,
    /// Distance to the bound on the safe side; negative means violated.
    pub margin: f64,
    pub slack: f64,
}

impl Entry {
    pub fn passed(&self) -> bool {
        self.margin >= -self.slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub sense: Sense,
    pub tolerance: Tolerance,
    pub entries: Vec<Entry>,
}

impl BoundReport {
    pub fn upper(name: impl Into<String>, tolerance: Tolerance) -> Self {
        BoundReport { name: name.into(), sense: Sense::Upper, tolerance, entries: Vec::new() }
    }

    pub fn lower(name: impl Into<String>, tolerance: Tolerance) -> Self {
        BoundReport { name: name.into(), sense: Sense::Lower, tolerance, entries: Vec::new() }
    }

    pub fn push(&mut self, k: usize, bound: f64, measured: f64) {
        let margin = match self.sense {
            Sense::Upper => bound - measured,
            Sense::Lower => measured - bound,
        };
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        let slack = self.tolerance.slack(bound, measured);
        self.entries.push(Entry { k, bound, measured, margin, slack });
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(Entry::passed)
    }

    pub fn first_violation(&self) -> Option<&Entry> {
        self.entries.iter().find(|e| !e.passed())
    }

    pub fn worst(&self) -> Option<&Entry> {
        self.entries.iter().min_by(|a, b| (a.margin + a.slack).total_cmp(&(b.margin + b.slack)))
    }

    pub fn summary(&self) -> CheckSummary {
        CheckSummary {
            name: self.name.clone(),
            sense: self.sense,
            pass: self.passed(),
            checked: self.entries.len(),
            worst: self.worst().copied(),
            first_violation: self.first_violation().copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub sense: Sense,
    pub pass: bool,
    pub checked: usize,
    pub worst: Option<Entry>,
    pub first_violation: Option<Entry>,
}

/// Named collection of bound reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckSuite {
    pub reports: Vec<BoundReport>,
}

impl CheckSuite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, r: BoundReport) {
        self.reports.push(r);
    }

    pub fn extend(&mut self, other: CheckSuite) {
        self.reports.extend(other.reports);
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(BoundReport::passed)
    }

    pub fn get(&self, name: &str) -> Option<&BoundReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn summaries(&self) -> Vec<CheckSummary> {
        self.reports.iter().map(BoundReport::summary).collect()
    }

    pub fn failures(&self) -> Vec<&str> {
        self.reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_and_sense() {
        let mut r = BoundReport::upper("u", Tolerance::DEFAULT);
        r.push(0, 1.0, 1.0 + 5e-10);
        assert!(r.passed());
        r.push(1, 1.0, 1.0 + 1e-8);
        assert!(!r.passed());
        assert_eq!(r.first_violation().unwrap().k, 1);

        let mut l = BoundReport::lower("l", Tolerance::DEFAULT);
        l.push(0, 2.0, 3.0);
        assert!(l.passed());
        assert_eq!(l.entries[0].margin, 1.0);
    }

    #[test]
    fn nan_measurement_fails() {
        let mut r = BoundReport::upper("u", Tolerance::DEFAULT);
        r.push(0, 1.0, f64::NAN);
        assert!(!r.passed());
    }
}
