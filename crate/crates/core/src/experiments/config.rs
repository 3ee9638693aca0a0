//! JSON experiment configs: defaults, validation and the starting point.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::km::RelaxationSchedule;
use crate::linalg::Vector;

use super::problems;

/// Iteration schemes a config can ask for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Relaxed Peaceman-Rachford with the configured schedule.
    #[default]
    Prs,
    /// Douglas-Rachford: relaxed PRS with `lambda = 1/2`.
    Drs,
    Fbs,
    Ppa,
    Admm,
    /// Decentralized consensus ADMM on a graph.
    Dadmm,
    /// DRS/PRS on a pair of set indicators.
    Feasibility,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] =
        [Algorithm::Prs, Algorithm::Drs, Algorithm::Fbs, Algorithm::Ppa, Algorithm::Admm, Algorithm::Dadmm, Algorithm::Feasibility];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Prs => "prs",
            Algorithm::Drs => "drs",
            Algorithm::Fbs => "fbs",
            Algorithm::Ppa => "ppa",
            Algorithm::Admm => "admm",
            Algorithm::Dadmm => "dadmm",
            Algorithm::Feasibility => "feasibility",
        }
    }
}

/// Starting point: explicit coordinates or a seeded draw, uniform in `[-scale, scale]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Z0Spec {
    Explicit(Vec<f64>),
    Random {
        seed: u64,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl Z0Spec {
    pub fn materialize(&self, dim: usize) -> Result<Vector> {
        match self {
            Z0Spec::Explicit(v) if v.len() == dim => Ok(Vector(v.clone())),
            Z0Spec::Explicit(v) => Err(Error::InvalidConfig(format!("z0 has {} entries, problem needs {dim}", v.len()))),
            Z0Spec::Random { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(Vector((0..dim).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect()))
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_iters() -> usize {
    10_000
}

/// One experiment. Keys not listed here are problem parameters and land in `params`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub schedule: RelaxationSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Z0Spec>,
    #[serde(default = "default_iters")]
    pub iters: usize,
    /// Check-name prefixes to keep; empty keeps every check.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    /// Artifact directory; defaults to `<output root>/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl ExperimentConfig {
    pub fn new(problem: impl Into<String>, algorithm: Algorithm) -> Self {
        ExperimentConfig {
            problem: problem.into(),
            algorithm,
            gamma: 1.0,
            schedule: RelaxationSchedule::default(),
            z0: None,
            iters: default_iters(),
            checks: Vec::new(),
            output: None,
            name: None,
            params: Map::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// Artifact name: `name` if set, else `<problem>-<algorithm>`.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}-{}", self.problem, self.algorithm.name()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.iters < 1 {
            return bad("iters must be at least 1".into());
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive and finite, got {}", self.gamma));
        }
        if self.algorithm == Algorithm::Drs && self.schedule != RelaxationSchedule::Constant(0.5) {
            return bad("drs fixes lambda = 1/2; use prs for other schedules".into());
        }
        self.schedule.validate(self.iters).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let spec = problems::lookup(&self.problem)?;
        if !spec.algorithms.contains(&self.algorithm) {
            let names: Vec<&str> = spec.algorithms.iter().map(Algorithm::name).collect();
            return bad(format!("problem {} does not run with {}; valid: {}", self.problem, self.algorithm.name(), names.join(", ")));
        }
        for key in self.params.keys() {
            if !spec.params.contains(&key.as_str()) {
                return bad(format!("unknown parameter {key} for problem {}; valid: {}", self.problem, spec.params.join(", ")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse and validate config text. Parse errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"problem": "abs_example", "eps": 0.1}"#).unwrap();
        assert_eq!(c.algorithm, Algorithm::Prs);
        assert_eq!(c.gamma, 1.0);
        assert_eq!(c.schedule, RelaxationSchedule::Constant(0.5));
        assert_eq!(c.iters, 10_000);
        assert_eq!(c.params["eps"], 0.1);
    }

    #[test]
    fn bad_algorithm_names_the_choices() {
        let e = parse_config(r#"{"problem": "abs_example", "algorithm": "newton"}"#).unwrap_err().to_string();
        for a in Algorithm::ALL {
            assert!(e.contains(a.name()), "{e}");
        }
    }

    #[test]
    fn parse_error_has_line_info() {
        let e = parse_config("{\n  \"problem\": \"square\",\n  \"gamma\": ,\n}").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn admm_lasso_round_trips() {
        let text = r#"{
            "problem": "lasso", "algorithm": "admm", "gamma": 0.8,
            "schedule": {"explicit": [0.5, 0.7, 0.9]}, "z0": {"seed": 3, "scale": 2.0},
            "iters": 2, "checks": ["admm_"], "rows": 8, "cols": 4, "rho": 0.2, "seed": 11
        }"#;
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn incompatible_and_unknown_rejected() {
        assert!(parse_config(r#"{"problem": "square", "algorithm": "fbs"}"#).is_err());
        assert!(parse_config(r#"{"problem": "square", "colour": 3}"#).is_err());
        assert!(parse_config(r#"{"problem": "nope"}"#).is_err());
        assert!(parse_config(r#"{"problem": "square", "iters": 0}"#).is_err());
        assert!(parse_config(r#"{"problem": "square", "algorithm": "drs", "schedule": {"constant": 0.9}}"#).is_err());
    }

    #[test]
    fn random_start_is_seeded() {
        let s = Z0Spec::Random { seed: 9, scale: 2.0 };
        let a = s.materialize(5).unwrap();
        assert_eq!(a, s.materialize(5).unwrap());
        assert!(a.0.iter().all(|x| x.abs() <= 2.0));
        assert!(Z0Spec::Explicit(vec![1.0]).materialize(2).is_err());
    }
}
