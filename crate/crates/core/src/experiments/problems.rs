//! Named problem families a config can refer to, and the random instances
//! shared with the reproduction registry.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{Map, Value};

use super::config::{Algorithm, ExperimentConfig};
use crate::admm::{DistributedProblem, Graph, LinearlyConstrainedProblem};
use crate::counterexamples::{arbitrarily_slow_setup, distance_lower_setup, optimal_fpr_setup, ppa_diag_setup, AbsExample, SquareExample};
use crate::error::{Error, Result};
use crate::feasibility::ConvexSetPair;
use crate::linalg::{ConvexSet, LinearMap, Subspace, Vector};
use crate::prox::{ProxFunction, QuadraticForm};

use Algorithm::*;

/// Catalog entry: which algorithms and parameters a problem accepts.
#[derive(Clone, Copy, Debug)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub algorithms: &'static [Algorithm],
    pub params: &'static [&'static str],
    pub summary: &'static str,
}

pub const CATALOG: &[ProblemSpec] = &[
    ProblemSpec { name: "abs_example", algorithms: &[Prs, Drs], params: &["eps"], summary: "f = |x|, g = 0, z0 = 2 - eps" },
    ProblemSpec { name: "one_d_drs", algorithms: &[Prs, Drs], params: &[], summary: "f = |x|, g = |x - 1| on the line" },
    ProblemSpec { name: "square", algorithms: &[Prs, Drs, Feasibility], params: &[], summary: "the two coordinate axes of the plane, z0 = (1, 1)" },
    ProblemSpec { name: "line_ball", algorithms: &[Prs, Drs, Feasibility], params: &[], summary: "the diagonal line and a disc in the plane" },
    ProblemSpec {
        name: "affine_pair",
        algorithms: &[Prs, Drs, Feasibility],
        params: &["dim", "shared", "extra", "seed"],
        summary: "two random affine subspaces with a common point",
    },
    ProblemSpec {
        name: "lasso",
        algorithms: &[Prs, Drs, Fbs, Admm],
        params: &["rows", "cols", "rho", "seed", "matrix", "b"],
        summary: "rho |x|_1 + 1/2 |M x - b|^2; random or inline data",
    },
    ProblemSpec { name: "least_squares", algorithms: &[Fbs, Ppa], params: &["rows", "cols", "seed"], summary: "1/2 |M x - b|^2" },
    ProblemSpec { name: "ppa_diag", algorithms: &[Ppa], params: &["alpha", "blocks"], summary: "1/2 sum_j x_j^2 / j with a slowly decaying start" },
    ProblemSpec {
        name: "optimal_fpr",
        algorithms: &[Prs, Drs, Feasibility],
        params: &["alpha", "blocks"],
        summary: "indicators of U and V on the rotation space; slow FPR",
    },
    ProblemSpec { name: "distance_pair", algorithms: &[Prs, Drs], params: &["alpha", "blocks"], summary: "d_V and the indicator of U on the rotation space" },
    ProblemSpec { name: "slow_drs", algorithms: &[Prs, Drs], params: &["exponent", "blocks"], summary: "rotation space tuned to converge slower than (t+2)^-exponent" },
    ProblemSpec { name: "consensus", algorithms: &[Dadmm], params: &["nodes", "graph", "seed"], summary: "a_i/2 (x - c_i)^2 at the nodes of a graph" },
];

pub fn lookup(name: &str) -> Result<&'static ProblemSpec> {
    CATALOG.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|p| p.name).collect();
        Error::InvalidConfig(format!("unknown problem {name}; known: {}", names.join(", ")))
    })
}

/// What an algorithm runs on.
#[derive(Clone, Debug)]
pub enum Kind {
    /// `min f + g` by PRS/DRS.
    Split { f: ProxFunction, g: ProxFunction },
    /// `min f + g` with `g` smooth, by FBS (PPA when `g = 0`).
    Smooth { f: ProxFunction, g: ProxFunction },
    Sets(ConvexSetPair),
    Constrained(LinearlyConstrainedProblem),
    Network(DistributedProblem),
}

#[derive(Clone, Debug)]
pub struct BuiltProblem {
    pub kind: Kind,
    /// Dimension of the starting point.
    pub dim: usize,
    pub default_z0: Option<Vector>,
    /// A fixed point (splitting) or minimizer (FBS/PPA) known in closed form.
    pub known_solution: Option<Vector>,
    /// Seed of the random instance, if any.
    pub seed: Option<u64>,
}

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| Error::InvalidConfig(format!("{key} must be a number"))),
        }
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.as_u64().ok_or_else(|| Error::InvalidConfig(format!("{key} must be a nonnegative integer"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64(key, default as u64)? as usize)
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| Error::InvalidConfig(format!("{key}: {e}"))),
        }
    }

    fn rows(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| Error::InvalidConfig(format!("{key}: {e}"))),
        }
    }
}

/// Standard normal entries scaled by `1/sqrt(rows)`.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let s = 1.0 / (rows as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| s * rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector((0..n).map(|_| rng.sample(StandardNormal)).collect())
}

/// Random lasso data `(M, b)`.
pub fn random_lasso_data(rows: usize, cols: usize, seed: u64) -> Result<(LinearMap, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = LinearMap::from_matrix(gaussian_matrix(rows, cols, &mut rng))?;
    Ok((m, gaussian_vector(rows, &mut rng)))
}

/// `C_i = p + span(U, V_i)` with random `p`, `U` (`shared` vectors) and `V_i`
/// (`extra` vectors each). Returns the sets and `p + P_U`, a map into `C_1 ∩ C_2`.
pub struct AffinePair {
    pub c1: ConvexSet,
    pub c2: ConvexSet,
    pub point: Vector,
    pub shared: Subspace,
}

impl AffinePair {
    pub fn random(dim: usize, shared: usize, extra: usize, seed: u64) -> Result<Self> {
        if shared + extra > dim || shared == 0 {
            return Err(Error::InvalidConfig(format!("need 0 < shared and shared + extra <= dim ({shared} + {extra} > {dim})")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<Vector> = (0..shared).map(|_| gaussian_vector(dim, &mut rng)).collect();
        let span = |rng: &mut ChaCha8Rng| {
            let mut b = u.clone();
            b.extend((0..extra).map(|_| gaussian_vector(dim, rng)));
            Subspace::from_basis(dim, &b)
        };
        let s1 = span(&mut rng)?;
        let s2 = span(&mut rng)?;
        let point = gaussian_vector(dim, &mut rng);
        Ok(AffinePair {
            c1: ConvexSet::affine(s1, point.clone())?,
            c2: ConvexSet::affine(s2, point.clone())?,
            shared: Subspace::from_basis(dim, &u)?,
            point,
        })
    }

    /// `p + P_U(z - p)`, a common point of both sets.
    pub fn common_point(&self, z: &Vector) -> Vector {
        &self.point + &self.shared.project(&(z - &self.point))
    }
}

/// `a/2 (x - c)^2` on the line.
pub fn centered_square(a: f64, c: f64) -> Result<ProxFunction> {
    Ok(ProxFunction::Quadratic(QuadraticForm::new(DMatrix::from_element(1, 1, a), Vector::scalar(-a * c), 0.5 * a * c * c)?))
}

/// Curvatures and centers of the consensus locals.
pub fn consensus_locals(nodes: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..nodes).map(|_| (rng.gen_range(0.5..3.0), rng.gen_range(-3.0..3.0))).collect()
}

/// `h(t) = (t + 2)^(-p)`
pub fn slow_rate(p: f64) -> impl Fn(f64) -> f64 {
    move |t| (t + 2.0).powf(-p)
}

fn split(f: ProxFunction, g: ProxFunction, z0: Vector, zstar: Option<Vector>) -> BuiltProblem {
    BuiltProblem { dim: z0.dim(), kind: Kind::Split { f, g }, default_z0: Some(z0), known_solution: zstar, seed: None }
}

/// Instantiate the problem a validated config names.
pub fn build(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let p = Params(&cfg.params);
    let alg = cfg.algorithm;
    let built = match cfg.problem.as_str() {
        "abs_example" => {
            let ex = AbsExample::new(p.f64("eps", 0.1)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let (f, g) = ex.functions();
            split(f, g, Vector::scalar(ex.z0()), Some(Vector::scalar(0.0)))
        }
        "one_d_drs" => split(ProxFunction::l1(1.0)?, ProxFunction::l1_centered(1.0, Vector::scalar(1.0))?, Vector::scalar(3.0), None),
        "square" => {
            let (f, g) = SquareExample.functions();
            let c_f = ConvexSet::Subspace(Subspace::coordinate(2, &[1])?);
            let c_g = ConvexSet::Subspace(Subspace::coordinate(2, &[0])?);
            sets_or_split(alg, ConvexSetPair::new(c_f, c_g)?, (f, g), SquareExample.z0(), Some(Vector::zeros(2)))
        }
        "line_ball" => {
            let line = ConvexSet::Subspace(Subspace::from_basis(2, &[Vector(vec![1.0, 1.0])])?);
            let ball = ConvexSet::ball(Vector(vec![2.0, 0.0]), 1.5)?;
            let pair = ConvexSetPair::new(line, ball)?;
            let fg = pair.functions();
            sets_or_split(alg, pair, fg, Vector(vec![-3.0, 4.0]), None)
        }
        "affine_pair" => {
            let seed = p.u64("seed", 0)?;
            let ap = AffinePair::random(p.usize("dim", 20)?, p.usize("shared", 4)?, p.usize("extra", 6)?, seed)?;
            let pair = ConvexSetPair::new(ap.c1, ap.c2)?;
            let fg = pair.functions();
            let dim = pair.c_f.dim();
            let mut b = sets_or_split(alg, pair, fg, Vector::zeros(dim), None);
            b.seed = Some(seed);
            b
        }
        "lasso" => {
            let rho = p.f64("rho", 0.1)?;
            let (m, b, seed) = match (p.rows("matrix")?, p.floats("b")?) {
                (Some(rows), Some(b)) => (LinearMap::from_rows(&rows)?, Vector(b), None),
                (None, None) => {
                    let seed = p.u64("seed", 0)?;
                    let (m, b) = random_lasso_data(p.usize("rows", 20)?, p.usize("cols", 10)?, seed)?;
                    (m, b, Some(seed))
                }
                _ => return Err(Error::InvalidConfig("inline lasso data needs both matrix and b".into())),
            };
            if m.rows() != b.dim() {
                return Err(Error::InvalidConfig("matrix and b disagree on the number of rows".into()));
            }
            let n = m.cols();
            let ls = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?);
            let l1 = ProxFunction::l1(rho).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let kind = match alg {
                Fbs => Kind::Smooth { f: l1, g: ls },
                Admm => Kind::Constrained(LinearlyConstrainedProblem::new(ls, l1, LinearMap::identity(n), LinearMap::scaled(-1.0, n), Vector::zeros(n))?),
                _ => Kind::Split { f: l1, g: ls },
            };
            BuiltProblem { kind, dim: n, default_z0: None, known_solution: None, seed }
        }
        "least_squares" => {
            let seed = p.u64("seed", 0)?;
            let (m, b) = random_lasso_data(p.usize("rows", 6)?, p.usize("cols", 10)?, seed)?;
            let ls = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?);
            let kind = match alg {
                Fbs => Kind::Smooth { f: ProxFunction::Zero, g: ls },
                _ => Kind::Smooth { f: ls, g: ProxFunction::Zero },
            };
            BuiltProblem { kind, dim: m.cols(), default_z0: None, known_solution: None, seed: Some(seed) }
        }
        "ppa_diag" => {
            let s = ppa_diag_setup(p.f64("alpha", 1.0)?, cfg.gamma, p.usize("blocks", 100_000)?, cfg.iters)?;
            let n = s.z0.dim();
            BuiltProblem { kind: Kind::Smooth { f: s.f, g: ProxFunction::Zero }, dim: n, default_z0: Some(s.z0), known_solution: Some(Vector::zeros(n)), seed: None }
        }
        "optimal_fpr" => {
            let s = optimal_fpr_setup(p.f64("alpha", 0.75)?, p.usize("blocks", 1000)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let pair = ConvexSetPair::new(ConvexSet::Subspace(s.space.v_subspace()), ConvexSet::Subspace(s.space.u_subspace()))?;
            let n = s.z0.dim();
            sets_or_split(alg, pair, s.space.indicator_pair(), s.z0, Some(Vector::zeros(n)))
        }
        "distance_pair" => {
            let s = distance_lower_setup(p.f64("alpha", 0.75)?, p.usize("blocks", 1000)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let (f, g) = s.space.distance_pair();
            let n = s.z0.dim();
            split(f, g, s.z0, Some(Vector::zeros(n)))
        }
        "slow_drs" => {
            let h = slow_rate(p.f64("exponent", 0.05)?);
            let s = arbitrarily_slow_setup(&h, p.usize("blocks", 50)?, cfg.iters).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let (f, g) = s.space.indicator_pair();
            let n = s.z0.dim();
            split(f, g, s.z0, Some(Vector::zeros(n)))
        }
        "consensus" => {
            let graph = match p.0.get("graph") {
                Some(Value::String(path)) => Graph::parse_edge_list(&std::fs::read_to_string(path)?)?,
                Some(_) => return Err(Error::InvalidConfig("graph must be the path of an edge-list file".into())),
                None => Graph::path(p.usize("nodes", 5)?),
            };
            let seed = p.u64("seed", 0)?;
            let locals = consensus_locals(graph.nodes(), seed).into_iter().map(|(a, c)| centered_square(a, c)).collect::<Result<Vec<_>>>()?;
            let n = graph.nodes();
            BuiltProblem { kind: Kind::Network(DistributedProblem::new(graph, locals, 1)?), dim: n, default_z0: None, known_solution: None, seed: Some(seed) }
        }
        other => return Err(lookup(other).err().unwrap_or_else(|| Error::InvalidConfig(format!("no builder for {other}")))),
    };
    Ok(built)
}

fn sets_or_split(alg: Algorithm, pair: ConvexSetPair, fg: (ProxFunction, ProxFunction), z0: Vector, zstar: Option<Vector>) -> BuiltProblem {
    let mut b = split(fg.0, fg.1, z0, zstar);
    if alg == Feasibility {
        b.kind = Kind::Sets(pair);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_entry_builds_with_defaults() {
        for spec in CATALOG {
            for &alg in spec.algorithms {
                let mut cfg = ExperimentConfig::new(spec.name, alg);
                cfg.iters = 50;
                if spec.name == "ppa_diag" {
                    cfg = cfg.with_param("blocks", 10_000);
                }
                cfg.validate().unwrap();
                let b = build(&cfg).unwrap_or_else(|e| panic!("{} / {}: {e}", spec.name, alg.name()));
                assert!(b.dim > 0);
            }
        }
    }

    #[test]
    fn affine_pair_common_point_lies_in_both() {
        let ap = AffinePair::random(20, 4, 6, 1).unwrap();
        let q = ap.common_point(&Vector(vec![1.0; 20]));
        assert!(ap.c1.distance(&q) < 1e-10 && ap.c2.distance(&q) < 1e-10);
    }

    #[test]
    fn inline_lasso_needs_matching_rows() {
        let cfg = ExperimentConfig::new("lasso", Prs).with_param("matrix", serde_json::json!([[1.0, 0.0], [0.0, 1.0]])).with_param("b", serde_json::json!([1.0]));
        assert!(build(&cfg).is_err());
    }

    #[test]
    fn ppa_diag_rejects_short_truncation() {
        let mut cfg = ExperimentConfig::new("ppa_diag", Ppa).with_param("blocks", 100);
        cfg.iters = 300;
        assert!(matches!(build(&cfg), Err(Error::InvalidConfig(_))));
    }
}
