//! Feasibility and primal objective bounds for relaxed ADMM, and the
//! per-iteration inequalities and identities behind them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AdmmTrace, DualCertificate, LinearlyConstrainedProblem};
use crate::error::{invalid, Result};
use crate::km::ScheduleTable;
use crate::linalg::Vector;
use crate::rates::Averaging;
use crate::report::{BoundReport, CheckSuite, Tolerance};
use crate::splitting::ErgodicAverage;

/// Both constants for the squared feasibility residual. They coincide in the
/// nonergodic mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityBound {
    /// `4 ||z0 - z*||^2 / (gamma Lambda_k^2)` in the ergodic mode.
    pub stated: f64,
    /// `||z0 - z*||^2 / (gamma^2 Lambda_k^2)` in the ergodic mode, from
    /// `rbar^k = (z^0 - z^{k+1}) / (2 gamma Lambda_k)` and Fejer monotonicity.
    pub derived: f64,
}

pub fn stated_ergodic_feasibility_bound(dist0: f64, gamma: f64, big_lambda_k: f64) -> f64 {
    4.0 * dist0 * dist0 / (gamma * big_lambda_k * big_lambda_k)
}

/// Bound on `||A x + B y - b||^2` (nonergodic) or on the same at the averages (ergodic).
pub fn admm_feasibility_bounds(cert: &DualCertificate, table: &ScheduleTable, k: usize, mode: Averaging) -> FeasibilityBound {
    let (d, g) = (cert.dist0, cert.gamma);
    match mode {
        Averaging::Ergodic => {
            let bl = table.big_lambda[k];
            FeasibilityBound {
                stated: stated_ergodic_feasibility_bound(d, g, bl),
                derived: d * d / (g * g * bl * bl),
            }
        }
        Averaging::Nonergodic => {
            let b = d * d / (4.0 * g * g * table.tau_floor[k] * (k + 1) as f64);
            FeasibilityBound { stated: b, derived: b }
        }
    }
}

/// Band for `f(x) + g(y) - f(x*) - g(y*)`.
/// Ergodic: `[-2 ||w*|| d / (gamma Lambda_k), ||z0 - (z* - w*)||^2 / (4 gamma Lambda_k)]`.
/// Nonergodic: `[-d ||w*||, d (d + ||w*||)] / (2 gamma sqrt(tau_floor (k+1)))`; the lower
/// end pairs `<r, w*>` with the residual bound, which carries the `1/gamma`.
pub fn admm_primal_bounds(cert: &DualCertificate, table: &ScheduleTable, k: usize, mode: Averaging) -> (f64, f64) {
    let (d, g, s) = (cert.dist0, cert.gamma, cert.wstar_norm());
    match mode {
        Averaging::Ergodic => {
            let bl = table.big_lambda[k];
            (-2.0 * s * d / (g * bl), cert.dist0_anchor * cert.dist0_anchor / (4.0 * g * bl))
        }
        Averaging::Nonergodic => {
            let den = 2.0 * g * (table.tau_floor[k] * (k + 1) as f64).sqrt();
            (-d * s / den, d * (d + s) / den)
        }
    }
}

struct Averages {
    x: ErgodicAverage,
    y: ErgodicAverage,
    w_dg: ErgodicAverage,
    w_df: ErgodicAverage,
}

impl Averages {
    fn new() -> Self {
        Averages { x: Default::default(), y: Default::default(), w_dg: Default::default(), w_df: Default::default() }
    }
}

/// Feasibility (nonergodic and derived ergodic) and both primal objective bands.
pub fn check_admm_bounds(p: &LinearlyConstrainedProblem, trace: &AdmmTrace, cert: &DualCertificate, table: &ScheduleTable, tol: Tolerance) -> Result<CheckSuite> {
    let mut feas = BoundReport::upper("admm_nonergodic_feasibility", tol);
    let mut efeas = BoundReport::upper("admm_ergodic_feasibility", tol);
    let mut hi = BoundReport::upper("admm_nonergodic_objective_upper", tol);
    let mut lo = BoundReport::lower("admm_nonergodic_objective_lower", tol);
    let mut ehi = BoundReport::upper("admm_ergodic_objective_upper", tol);
    let mut elo = BoundReport::lower("admm_ergodic_objective_lower", tol);
    let mut avg = Averages::new();
    for r in &trace.records {
        if r.k > table.horizon() {
            return invalid("schedule table shorter than the trace");
        }
        feas.push(r.k, admm_feasibility_bounds(cert, table, r.k, Averaging::Nonergodic).derived, r.residual.norm_sq());
        let xb = avg.x.push(r.lambda, &r.x).clone();
        let yb = avg.y.push(r.lambda, &r.y).clone();
        efeas.push(r.k, admm_feasibility_bounds(cert, table, r.k, Averaging::Ergodic).derived, p.residual(&xb, &yb).norm_sq());
        if let Some(o) = r.objective {
            let (b_lo, b_hi) = admm_primal_bounds(cert, table, r.k, Averaging::Nonergodic);
            hi.push(r.k, b_hi, o - cert.obj_star);
            lo.push(r.k, b_lo, o - cert.obj_star);
            let eo = p.objective(&xb, &yb)? - cert.obj_star;
            let (b_lo, b_hi) = admm_primal_bounds(cert, table, r.k, Averaging::Ergodic);
            ehi.push(r.k, b_hi, eo);
            elo.push(r.k, b_lo, eo);
        }
    }
    let mut s = CheckSuite::new();
    for r in [feas, efeas, hi, lo, ehi, elo] {
        s.add(r);
    }
    Ok(s)
}

/// Per-iteration primal inequalities and the dual-to-primal conversion identity
/// `4 gamma l (P_k - P*) = -4 gamma l (D_k - D*) + 2 (1 - 1/(2l)) ||z^k - z^{k+1}||^2 + 2 <z^k - z^{k+1}, z^{k+1}>`,
/// with `P = f + g` and `D = d_f(w_df) + d_g(w_dg)` from Fenchel-Young equality.
/// The identity is checked with `identity_tol`.
pub fn check_admm_fundamental(
    p: &LinearlyConstrainedProblem,
    trace: &AdmmTrace,
    cert: &DualCertificate,
    tol: Tolerance,
    identity_tol: Tolerance,
) -> Result<CheckSuite> {
    let gamma = trace.gamma;
    let anchor = cert.anchor();
    let mut up = BoundReport::upper("admm_fundamental_upper", tol);
    let mut lo = BoundReport::lower("admm_fundamental_lower", tol);
    let mut elo = BoundReport::lower("admm_fundamental_lower_ergodic", tol);
    let mut ident = BoundReport::upper("admm_conversion_identity", identity_tol);
    let mut at_cert = BoundReport::upper("admm_dual_primal_value_gap", identity_tol);
    let refl = Vector::lincomb(2.0, &cert.wstar, -1.0, &cert.zstar);
    let (_, w_df_star) = super::dual_prox_f(p, gamma, &refl)?;
    let d_star = p.dual_f_value(&w_df_star, &cert.xstar)? + p.dual_g_value(&cert.wstar, &cert.ystar)?;
    at_cert.push(0, 0.0, (d_star + cert.obj_star).abs());
    let mut avg = Averages::new();
    for w in trace.records.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let l = r.lambda;
        let obj = match r.objective {
            Some(o) => o,
            None => return invalid("fundamental checks need objective values"),
        };
        let gap = obj - cert.obj_star;
        let dz = &r.z - &next.z;
        let rhs = r.z.dist_sq(&anchor) - next.z.dist_sq(&anchor) + (1.0 - 1.0 / l) * dz.norm_sq();
        up.push(r.k, rhs, 4.0 * gamma * l * gap);
        lo.push(r.k, (&r.w_dg - &r.w_df).dot(&cert.wstar) / gamma, gap);
        let xb = avg.x.push(l, &r.x).clone();
        let yb = avg.y.push(l, &r.y).clone();
        let wg = avg.w_dg.push(l, &r.w_dg).clone();
        let wf = avg.w_df.push(l, &r.w_df).clone();
        elo.push(r.k, (&wg - &wf).dot(&cert.wstar) / gamma, p.objective(&xb, &yb)? - cert.obj_star);
        let d_k = p.dual_f_value(&r.w_df, &r.x)? + p.dual_g_value(&r.w_dg, &r.y)?;
        let lhs = 4.0 * gamma * l * gap;
        let rhs = -4.0 * gamma * l * (d_k - d_star) + 2.0 * (1.0 - 1.0 / (2.0 * l)) * dz.norm_sq() + 2.0 * dz.dot(&next.z);
        ident.push(r.k, 0.0, (lhs - rhs).abs());
    }
    let mut s = CheckSuite::new();
    for r in [up, lo, elo, ident, at_cert] {
        s.add(r);
    }
    Ok(s)
}

/// `||z^{k+1} - z^k + 2 gamma lambda_k (A x^k + B y^k - b)|| / max(1, ||z^k||)` against zero.
pub fn check_step_identity(trace: &AdmmTrace, tol: Tolerance) -> BoundReport {
    let mut rep = BoundReport::upper("admm_step_identity", tol);
    for w in trace.records.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let mut d = &next.z - &r.z;
        d.axpy(2.0 * trace.gamma * r.lambda, &r.residual);
        rep.push(r.k, 0.0, d.norm() / r.z.norm().max(1.0));
    }
    rep
}

/// Sample the subgradient inequalities `f(u) >= f(x) + <A^T w_df, u - x>` and
/// `g(u) >= g(y) + <B^T w_dg, u - y>` at `probes` random points around every
/// `stride`-th iterate.
pub fn check_subgradient_inclusions(
    p: &LinearlyConstrainedProblem,
    trace: &AdmmTrace,
    probes: usize,
    stride: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<CheckSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rf = BoundReport::lower("subgradient_f", tol);
    let mut rg = BoundReport::lower("subgradient_g", tol);
    for r in trace.records.iter().step_by(stride.max(1)) {
        let sf = p.a.apply_t(&r.w_df);
        let sg = p.b_map.apply_t(&r.w_dg);
        let (fx, gy) = (p.f.eval(&r.x)?, p.g.eval(&r.y)?);
        for _ in 0..probes {
            let scale = 1.0 + r.x.norm();
            let u = Vector((0..r.x.dim()).map(|i| r.x[i] + scale * rng.gen_range(-1.0..1.0)).collect());
            rf.push(r.k, 0.0, p.f.eval(&u)? - fx - sf.dot(&(&u - &r.x)));
            let scale = 1.0 + r.y.norm();
            let u = Vector((0..r.y.dim()).map(|i| r.y[i] + scale * rng.gen_range(-1.0..1.0)).collect());
            rg.push(r.k, 0.0, p.g.eval(&u)? - gy - sg.dot(&(&u - &r.y)));
        }
    }
    let mut s = CheckSuite::new();
    s.add(rf);
    s.add(rg);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::{admm_reference, run_relaxed_admm};
    use crate::km::RelaxationSchedule;
    use crate::linalg::LinearMap;
    use crate::prox::ProxFunction;

    fn cert(dist0: f64, w: f64, gamma: f64) -> DualCertificate {
        DualCertificate {
            gamma,
            zstar: Vector::scalar(0.0),
            wstar: Vector::scalar(w),
            xstar: Vector::scalar(0.0),
            ystar: Vector::scalar(0.0),
            obj_star: 0.0,
            dist0,
            dist0_anchor: dist0,
            residual: 0.0,
        }
    }

    #[test]
    fn plugged_values() {
        let t = RelaxationSchedule::Constant(0.5).tabulate(5).unwrap();
        let b = admm_feasibility_bounds(&cert(1.0, 1.0, 1.0), &t, 0, Averaging::Nonergodic);
        assert_eq!(b.derived, 1.0);
        assert_eq!(admm_feasibility_bounds(&cert(0.0, 1.0, 1.0), &t, 3, Averaging::Ergodic).stated, 0.0);
        let (_, hi) = admm_primal_bounds(&cert(1.0, 1.0, 1.0), &t, 3, Averaging::Nonergodic);
        assert!((hi - 1.0).abs() < 1e-15);
        let (lo, _) = admm_primal_bounds(&cert(1.0, 0.0, 1.0), &t, 3, Averaging::Ergodic);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn lasso_run_passes_every_check() {
        let m = LinearMap::from_rows(&[vec![1.0, 0.3], vec![0.2, 1.5], vec![-0.4, 0.8]]).unwrap();
        let f = ProxFunction::Quadratic(
            crate::prox::QuadraticForm::least_squares(&m, &Vector(vec![1.0, -1.0, 0.5])).unwrap(),
        );
        let p = LinearlyConstrainedProblem::new(
            f,
            ProxFunction::l1(0.4).unwrap(),
            LinearMap::identity(2),
            LinearMap::scaled(-1.0, 2),
            Vector::zeros(2),
        )
        .unwrap();
        let z0 = Vector(vec![2.0, -3.0]);
        let c = admm_reference(&p, 1.0, &z0, 100_000).unwrap();
        let sched = RelaxationSchedule::Constant(0.5);
        let tr = run_relaxed_admm(&p, 1.0, &sched, &z0, 300).unwrap();
        let table = sched.tabulate(300).unwrap();
        let s = check_admm_bounds(&p, &tr, &c, &table, Tolerance::DEFAULT).unwrap();
        assert!(s.passed(), "{:?}", s.failures());
        let s = check_admm_fundamental(&p, &tr, &c, Tolerance::DEFAULT, Tolerance::abs(1e-8)).unwrap();
        assert!(s.passed(), "{:?}", s.failures());
        assert!(check_step_identity(&tr, Tolerance::abs(1e-13)).passed());
        let s = check_subgradient_inclusions(&p, &tr, 20, 10, 7, Tolerance::DEFAULT).unwrap();
        assert!(s.passed(), "{:?}", s.failures());
    }
}
