//! Relaxed ADMM for `min f(x) + g(y)` subject to `Ax + By = b`, run as
//! relaxed PRS on the dual through the dual proximal subproblems.

mod bounds;
mod distributed;
mod model_fitting;
mod subproblem;

use std::sync::Arc;

pub use bounds::{
    admm_feasibility_bounds, admm_primal_bounds, check_admm_bounds, check_admm_fundamental, check_step_identity,
    check_subgradient_inclusions, stated_ergodic_feasibility_bound, FeasibilityBound,
};
pub use distributed::{
    edge_formulation, run_distributed_admm, DistributedProblem, DistributedTrace, Graph, Message,
};
pub use model_fitting::{split_across_examples, split_across_features, split_auxiliary};
pub use subproblem::{SolverKind, SubproblemSolver, INNER_CAP, INNER_TOL};

use crate::error::{invalid, Error, Result};
use crate::km::RelaxationSchedule;
use crate::linalg::{LinearMap, Vector};
use crate::prox::{CustomFunction, ProxFunction};
use crate::splitting::{REFERENCE_ACCEPT, REFERENCE_TARGET};

/// `min f(x) + g(y)` subject to `A x + B y = b`.
#[derive(Clone, Debug)]
pub struct LinearlyConstrainedProblem {
    pub f: ProxFunction,
    pub g: ProxFunction,
    pub a: LinearMap,
    pub b_map: LinearMap,
    pub b: Vector,
}

impl LinearlyConstrainedProblem {
    pub fn new(f: ProxFunction, g: ProxFunction, a: LinearMap, b_map: LinearMap, b: Vector) -> Result<Self> {
        if a.rows() != b.dim() || b_map.rows() != b.dim() {
            return invalid("A, B and b must share the constraint space");
        }
        Ok(LinearlyConstrainedProblem { f, g, a, b_map, b })
    }

    pub fn x_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn y_dim(&self) -> usize {
        self.b_map.cols()
    }

    pub fn constraint_dim(&self) -> usize {
        self.b.dim()
    }

    /// `A x + B y - b`
    pub fn residual(&self, x: &Vector, y: &Vector) -> Vector {
        let mut r = self.a.apply(x);
        r.axpy(1.0, &self.b_map.apply(y));
        r.axpy(-1.0, &self.b);
        r
    }

    /// `f(x) + g(y)`
    pub fn objective(&self, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(self.f.eval(x)? + self.g.eval(y)?)
    }

    /// `d_f(w) = <A^T w, x> - f(x)` at an `x` with `A^T w` in `df(x)`.
    pub fn dual_f_value(&self, w: &Vector, x: &Vector) -> Result<f64> {
        Ok(self.a.apply(x).dot(w) - self.f.eval(x)?)
    }

    /// `d_g(w) = <B^T w, y> - g(y) - <w, b>` at a `y` with `B^T w` in `dg(y)`.
    pub fn dual_g_value(&self, w: &Vector, y: &Vector) -> Result<f64> {
        Ok(self.b_map.apply(y).dot(w) - self.g.eval(y)? - w.dot(&self.b))
    }

    pub fn solvers(&self, gamma: f64) -> Result<(SubproblemSolver<'_>, SubproblemSolver<'_>)> {
        Ok((SubproblemSolver::new(&self.f, &self.a, gamma)?, SubproblemSolver::new(&self.g, &self.b_map, gamma)?))
    }
}

/// `w+ = prox_{gamma d_f}(w)`: `x+ = argmin f(x) - <w, Ax> + gamma/2 ||Ax||^2`, `w+ = w - gamma A x+`.
pub fn dual_prox_f(p: &LinearlyConstrainedProblem, gamma: f64, w: &Vector) -> Result<(Vector, Vector)> {
    let s = SubproblemSolver::new(&p.f, &p.a, gamma)?;
    dual_step_f(p, &s, gamma, w, None)
}

/// `v+ = prox_{gamma d_g}(v)`: `y+ = argmin g(y) - <v, By - b> + gamma/2 ||By - b||^2`, `v+ = v - gamma (B y+ - b)`.
pub fn dual_prox_g(p: &LinearlyConstrainedProblem, gamma: f64, v: &Vector) -> Result<(Vector, Vector)> {
    let s = SubproblemSolver::new(&p.g, &p.b_map, gamma)?;
    dual_step_g(p, &s, gamma, v, None)
}

fn dual_step_f(p: &LinearlyConstrainedProblem, s: &SubproblemSolver<'_>, gamma: f64, w: &Vector, warm: Option<&Vector>) -> Result<(Vector, Vector)> {
    let x = s.solve(&w.scale(1.0 / gamma), warm)?;
    let wp = Vector::lincomb(1.0, w, -gamma, &p.a.apply(&x));
    Ok((x, wp))
}

fn dual_step_g(p: &LinearlyConstrainedProblem, s: &SubproblemSolver<'_>, gamma: f64, v: &Vector, warm: Option<&Vector>) -> Result<(Vector, Vector)> {
    let target = Vector::lincomb(1.0, &p.b, 1.0 / gamma, v);
    let y = s.solve(&target, warm)?;
    let vp = Vector::lincomb(1.0, v, -gamma, &(&p.b_map.apply(&y) - &p.b));
    Ok((y, vp))
}

/// One ADMM iterate `k`. `z = w_dg + gamma (B y - b)` is the dual PRS variable.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmRecord {
    pub k: usize,
    pub lambda: f64,
    pub x: Vector,
    pub y: Vector,
    pub w_dg: Vector,
    pub w_df: Vector,
    pub z: Vector,
    /// `A x + B y - b`
    pub residual: Vector,
    /// `f(x) + g(y)` when both can be evaluated.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmTrace {
    pub gamma: f64,
    pub records: Vec<AdmmRecord>,
}

impl AdmmTrace {
    pub fn z_sequence(&self) -> Vec<&Vector> {
        self.records.iter().map(|r| &r.z).collect()
    }

    pub fn last(&self) -> Option<&AdmmRecord> {
        self.records.last()
    }
}

/// Relaxed ADMM from `w_dg^{-1} = z0`, `x^{-1} = 0`, `y^{-1} = 0`, `lambda_{-1} = 1/2`.
/// Records `k = 0..=iters`.
pub fn run_relaxed_admm(
    p: &LinearlyConstrainedProblem,
    gamma: f64,
    schedule: &RelaxationSchedule,
    z0: &Vector,
    iters: usize,
) -> Result<AdmmTrace> {
    schedule.validate(iters)?;
    if z0.dim() != p.constraint_dim() {
        return invalid("z0 must live in the constraint space");
    }
    let (sf, sg) = p.solvers(gamma)?;
    let can_eval = p.f.can_eval() && p.g.can_eval();
    let mut records = Vec::with_capacity(iters + 1);
    let mut x_prev = Vector::zeros(p.x_dim());
    let mut y_prev = Vector::zeros(p.y_dim());
    let mut w_prev = z0.clone();
    let mut lambda_prev = 0.5;
    for k in 0..=iters {
        // y^k = argmin g(y) + gamma/2 ||B y - v||^2 with the relaxed target
        let r_prev = p.residual(&x_prev, &y_prev);
        let ax_prev = p.a.apply(&x_prev);
        let mut v = p.b.clone();
        v.axpy(-1.0, &ax_prev);
        v.axpy(-(2.0 * lambda_prev - 1.0), &r_prev);
        v.axpy(1.0 / gamma, &w_prev);
        let y = sg.solve(&v, Some(&y_prev))?;
        let by = p.b_map.apply(&y);
        let mut w_dg = w_prev.clone();
        w_dg.axpy(-gamma, &(&(&ax_prev + &by) - &p.b));
        w_dg.axpy(-gamma * (2.0 * lambda_prev - 1.0), &r_prev);
        // x^k = argmin f(x) + gamma/2 ||A x - (b - B y + w_dg/gamma)||^2
        let mut u = p.b.clone();
        u.axpy(-1.0, &by);
        u.axpy(1.0 / gamma, &w_dg);
        let x = sf.solve(&u, Some(&x_prev))?;
        let residual = p.residual(&x, &y);
        let w_df = Vector::lincomb(1.0, &w_dg, -gamma, &residual);
        let mut z = w_dg.clone();
        z.axpy(gamma, &(&by - &p.b));
        if !z.is_finite() || !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }
        let objective = if can_eval { Some(p.objective(&x, &y)?) } else { None };
        let lambda = schedule.lambda(k);
        x_prev = x.clone();
        y_prev = y.clone();
        w_prev = w_dg.clone();
        lambda_prev = lambda;
        records.push(AdmmRecord { k, lambda, x, y, w_dg, w_df, z, residual, objective });
    }
    Ok(AdmmTrace { gamma, records })
}

/// `(d_f, d_g)` as functions exposing only their proximal maps, so relaxed
/// PRS can be run on the dual directly.
pub fn dual_functions(p: &LinearlyConstrainedProblem) -> (ProxFunction, ProxFunction) {
    let pf = Arc::new(p.clone());
    let pg = Arc::clone(&pf);
    let prox_f = move |gamma: f64, w: &Vector| match dual_prox_f(&pf, gamma, w) {
        Ok((_, wp)) => wp,
        Err(_) => Vector(vec![f64::NAN; w.dim()]),
    };
    let prox_g = move |gamma: f64, v: &Vector| match dual_prox_g(&pg, gamma, v) {
        Ok((_, vp)) => vp,
        Err(_) => Vector(vec![f64::NAN; v.dim()]),
    };
    let mk = |name: &str, prox: crate::prox::ProxFn| {
        ProxFunction::Custom(CustomFunction { name: name.into(), eval: None, prox: Some(prox), accuracy: INNER_TOL })
    };
    (mk("d_f", Arc::new(prox_f)), mk("d_g", Arc::new(prox_g)))
}

/// A fixed point `z*` of the dual PRS operator and the primal-dual data derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate {
    pub gamma: f64,
    pub zstar: Vector,
    /// `w* = prox_{gamma d_g}(z*)`
    pub wstar: Vector,
    pub xstar: Vector,
    pub ystar: Vector,
    /// `f(x*) + g(y*)`
    pub obj_star: f64,
    /// `||z0 - z*||`
    pub dist0: f64,
    /// `||z0 - (z* - w*)||`
    pub dist0_anchor: f64,
    /// `||T_PRS z* - z*|| = 2 gamma ||A x* + B y* - b||`
    pub residual: f64,
}

impl DualCertificate {
    pub fn from_fixed_point(p: &LinearlyConstrainedProblem, gamma: f64, zstar: Vector, z0: &Vector) -> Result<Self> {
        let (ystar, wstar) = dual_prox_g(p, gamma, &zstar)?;
        let refl = Vector::lincomb(2.0, &wstar, -1.0, &zstar);
        let (xstar, w_df) = dual_prox_f(p, gamma, &refl)?;
        let residual = 2.0 * w_df.dist(&wstar);
        if residual > REFERENCE_ACCEPT * zstar.norm().max(1.0) {
            return Err(Error::NonConvergence { budget: 0, residual });
        }
        let obj_star = p.objective(&xstar, &ystar).unwrap_or(f64::NAN);
        let anchor = &zstar - &wstar;
        Ok(DualCertificate {
            gamma,
            dist0: z0.dist(&zstar),
            dist0_anchor: z0.dist(&anchor),
            zstar,
            wstar,
            xstar,
            ystar,
            obj_star,
            residual,
        })
    }

    /// `z* - w*`
    pub fn anchor(&self) -> Vector {
        &self.zstar - &self.wstar
    }

    pub fn wstar_norm(&self) -> f64 {
        self.wstar.norm()
    }
}

/// Run standard ADMM until `||z^{k+1} - z^k||` reaches the reference target or stalls.
pub fn admm_reference(p: &LinearlyConstrainedProblem, gamma: f64, z0: &Vector, budget: usize) -> Result<DualCertificate> {
    let (sf, sg) = p.solvers(gamma)?;
    let mut z = z0.clone();
    let mut best = (f64::INFINITY, z.clone());
    let mut stalled = 0usize;
    let (mut xw, mut yw) = (None, None);
    for _ in 0..budget {
        let (y, w_dg) = dual_step_g(p, &sg, gamma, &z, yw.as_ref())?;
        let refl = Vector::lincomb(2.0, &w_dg, -1.0, &z);
        let (x, w_df) = dual_step_f(p, &sf, gamma, &refl, xw.as_ref())?;
        let diff = &w_df - &w_dg;
        let res = 2.0 * diff.norm();
        if res < best.0 {
            if res < 0.999 * best.0 {
                stalled = 0;
            }
            best = (res, z.clone());
        } else {
            stalled += 1;
        }
        if res <= REFERENCE_TARGET * z.norm().max(1.0) || (stalled > 5000 && best.0 <= REFERENCE_ACCEPT) {
            break;
        }
        z.axpy(1.0, &diff);
        xw = Some(x);
        yw = Some(y);
    }
    if best.0 > REFERENCE_ACCEPT * best.1.norm().max(1.0) {
        return Err(Error::NonConvergence { budget, residual: best.0 });
    }
    DualCertificate::from_fixed_point(p, gamma, best.1, z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::run_relaxed_prs;

    fn scalar_map(s: f64) -> LinearMap {
        LinearMap::scaled(s, 1)
    }

    fn half_square() -> ProxFunction {
        ProxFunction::diagonal_quadratic(vec![1.0]).unwrap()
    }

    #[test]
    fn dual_prox_closed_forms() {
        let p = LinearlyConstrainedProblem::new(half_square(), half_square(), scalar_map(1.0), scalar_map(1.0), Vector::scalar(0.0)).unwrap();
        // d_f(w) = w^2/2, so prox at gamma = 1 halves w
        let (x, w) = dual_prox_f(&p, 1.0, &Vector::scalar(2.0)).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (w[0] - 1.0).abs() < 1e-15);
        let (y, v) = dual_prox_g(&p, 1.0, &Vector::scalar(2.0)).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (v[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dual_prox_degenerate_cases() {
        let zero_set = ProxFunction::Indicator(crate::linalg::ConvexSet::boxed(Vector::scalar(0.0), Vector::scalar(0.0)).unwrap());
        let p = LinearlyConstrainedProblem::new(zero_set, ProxFunction::Zero, scalar_map(3.0), scalar_map(0.0), Vector::scalar(0.0)).unwrap();
        let (x, w) = dual_prox_f(&p, 1.0, &Vector::scalar(0.7)).unwrap();
        assert_eq!((x[0], w[0]), (0.0, 0.7));
        let (y, v) = dual_prox_g(&p, 1.0, &Vector::scalar(0.7)).unwrap();
        assert_eq!((y[0], v[0]), (0.0, 0.7));
    }

    #[test]
    fn dual_prox_l1_against_grid() {
        let p = LinearlyConstrainedProblem::new(ProxFunction::l1(1.0).unwrap(), ProxFunction::Zero, scalar_map(1.0), scalar_map(1.0), Vector::scalar(0.0)).unwrap();
        let (x, w) = dual_prox_f(&p, 1.0, &Vector::scalar(0.5)).unwrap();
        let grid = (-2000..=2000).map(|i| i as f64 * 1e-3).min_by(|a, b| {
            let h = |t: f64| t.abs() - 0.5 * t + 0.5 * t * t;
            h(*a).total_cmp(&h(*b))
        });
        assert_eq!(grid, Some(0.0));
        assert_eq!((x[0], w[0]), (0.0, 0.5));
    }

    #[test]
    fn abs_plus_square_converges_to_zero() {
        let g = ProxFunction::quadratic(nalgebra::DMatrix::from_element(1, 1, 1.0), Vector::scalar(-1.0), 0.5).unwrap();
        let p = LinearlyConstrainedProblem::new(ProxFunction::l1(1.0).unwrap(), g, scalar_map(1.0), scalar_map(-1.0), Vector::scalar(0.0)).unwrap();
        let t = run_relaxed_admm(&p, 1.0, &RelaxationSchedule::Constant(0.5), &Vector::scalar(0.0), 200).unwrap();
        let last = t.last().unwrap();
        assert!(last.x[0].abs() < 1e-8 && last.y[0].abs() < 1e-8);
    }

    #[test]
    fn matches_prs_on_dual_and_step_identity() {
        let p = LinearlyConstrainedProblem::new(half_square(), ProxFunction::l1(0.3).unwrap(), scalar_map(2.0), scalar_map(-1.0), Vector::scalar(1.0)).unwrap();
        let sched = RelaxationSchedule::Explicit((0..51).map(|k| 0.2 + 0.7 * ((k * 7) % 10) as f64 / 10.0).collect());
        let z0 = Vector::scalar(0.4);
        let t = run_relaxed_admm(&p, 0.8, &sched, &z0, 50).unwrap();
        let (df, dg) = dual_functions(&p);
        let prs = run_relaxed_prs(&df, &dg, 0.8, &sched, &z0, 50).unwrap();
        for (a, b) in t.records.iter().zip(&prs.records) {
            assert!(a.z.max_abs_diff(b.z.as_ref().unwrap()) < 1e-12);
        }
        for w in t.records.windows(2) {
            let step = &w[1].z - &w[0].z;
            let pred = w[0].residual.scale(-2.0 * 0.8 * w[0].lambda);
            assert!(step.max_abs_diff(&pred) < 1e-13);
        }
    }

    #[test]
    fn certificate_start_stays_put() {
        let p = LinearlyConstrainedProblem::new(half_square(), ProxFunction::l1(0.3).unwrap(), scalar_map(2.0), scalar_map(-1.0), Vector::scalar(1.0)).unwrap();
        let cert = admm_reference(&p, 1.0, &Vector::scalar(0.0), 10_000).unwrap();
        assert!(p.residual(&cert.xstar, &cert.ystar).norm() < 1e-8);
        let t = run_relaxed_admm(&p, 1.0, &RelaxationSchedule::Constant(0.5), &cert.zstar, 20).unwrap();
        assert!(t.records.iter().all(|r| r.residual.norm() <= 1e-8));
    }
}
