//! Rate bounds for relaxed PRS/DRS and FBS, the summable-sequence lemma,
//! and log-log decay fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::km::{IterationTrace, ScheduleTable};
use crate::report::{BoundReport, CheckSuite, Tolerance};
use crate::splitting::{FbsConfig, SolutionCertificate};

/// Which statement of the summable-sequence lemma to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaPart {
    /// Nonincreasing `a`: `Lambda_k a_k <= sum_{i<=k} lambda_i a_i`.
    Monotone,
    /// `a_{k+1} <= a_k + e_k`:
    /// `a_k <= (sum_i lambda_i a_i + sum_{i<k} Lambda_i e_i) / Lambda_k`.
    UpToErrors,
    /// `lambda_k a_k <= b_k - b_{k+1} + e_k`:
    /// `sum_{i<=k} (i+1) lambda_i a_i <= sum_i b_i + sum_i (i+1) e_i`.
    Telescoping,
    /// Running minimum: `Lambda_k min_{i<=k} a_i <= sum_{i<=k} lambda_i a_i`, and the minimum is monotone.
    RunningMin,
}

/// Input to `verify_summable_lemma`. `a` and `lambda` cover `k = 0..=K`; `e`
/// covers the same range when needed; `b` covers `k = 0..=K+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceCheck {
    pub part: LemmaPart,
    pub a: Vec<f64>,
    pub lambda: Vec<f64>,
    pub e: Vec<f64>,
    pub b: Vec<f64>,
}

impl SequenceCheck {
    pub fn new(part: LemmaPart, a: Vec<f64>, lambda: Vec<f64>) -> Self {
        SequenceCheck { part, a, lambda, e: Vec::new(), b: Vec::new() }
    }

    pub fn with_errors(mut self, e: Vec<f64>) -> Self {
        self.e = e;
        self
    }

    pub fn with_b(mut self, b: Vec<f64>) -> Self {
        self.b = b;
        self
    }
}

/// Check the chosen lemma statement at every `k` up to the horizon. Sums
/// over the whole horizon stand in for infinite sums only on the side of the
/// inequality where that weakens the claim.
pub fn verify_summable_lemma(c: &SequenceCheck, tol: Tolerance) -> Result<BoundReport> {
    let n = c.a.len();
    if c.lambda.len() != n {
        return invalid("a and lambda must have equal length");
    }
    if c.a.iter().any(|v| !(*v >= 0.0)) {
        return invalid("a must be nonnegative");
    }
    if c.lambda.iter().any(|l| !(*l > 0.0)) {
        return invalid("lambda must be positive");
    }
    let mut big = Vec::with_capacity(n);
    let mut acc = 0.0;
    for l in &c.lambda {
        acc += l;
        big.push(acc);
    }
    let mut weighted = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (a, l) in c.a.iter().zip(&c.lambda) {
        acc += l * a;
        weighted.push(acc);
    }
    let total = weighted.last().copied().unwrap_or(0.0);
    match c.part {
        LemmaPart::Monotone => {
            if c.a.windows(2).any(|w| w[1] > w[0]) {
                return invalid("a must be nonincreasing");
            }
            let mut r = BoundReport::upper("lemma_monotone", tol);
            for (k, (b, a)) in big.iter().zip(&c.a).enumerate() {
                r.push(k, total, b * a);
            }
            Ok(r)
        }
        LemmaPart::UpToErrors => {
            if c.e.len() != n {
                return invalid("e must have the same length as a");
            }
            for k in 0..n.saturating_sub(1) {
                if c.a[k + 1] > c.a[k] + c.e[k] + tol.slack(c.a[k], c.a[k + 1]) {
                    return invalid(format!("hypothesis a_(k+1) <= a_k + e_k fails at k = {k}"));
                }
            }
            // sum_{i<k} Lambda_i e_i exactly, plus the horizon tail with negative terms dropped
            let mut prefix = vec![0.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] + big[i] * c.e[i];
            }
            let mut tail = vec![0.0; n + 1];
            for i in (0..n.saturating_sub(1)).rev() {
                tail[i] = tail[i + 1] + big[i] * c.e[i].max(0.0);
            }
            let mut r = BoundReport::upper("lemma_up_to_errors", tol);
            for k in 0..n {
                let err = prefix[k] + tail[k];
                r.push(k, (total + err) / big[k], c.a[k]);
            }
            Ok(r)
        }
        LemmaPart::Telescoping => {
            if c.b.len() != n + 1 || c.e.len() != n {
                return invalid("telescoping check needs b of length K+2 and e of length K+1");
            }
            if c.b.iter().chain(&c.e).any(|v| !(*v >= 0.0)) {
                return invalid("b and e must be nonnegative");
            }
            for k in 0..n {
                let lhs = c.lambda[k] * c.a[k];
                let rhs = c.b[k] - c.b[k + 1] + c.e[k];
                if lhs > rhs + tol.slack(lhs, rhs) {
                    return invalid(format!("hypothesis lambda_k a_k <= b_k - b_(k+1) + e_k fails at k = {k}"));
                }
            }
            let bound: f64 = c.b[..n].iter().sum::<f64>() + c.e.iter().enumerate().map(|(i, e)| (i + 1) as f64 * e).sum::<f64>();
            let mut r = BoundReport::upper("lemma_telescoping", tol);
            let mut s = 0.0;
            for k in 0..n {
                s += (k + 1) as f64 * c.lambda[k] * c.a[k];
                r.push(k, bound, s);
            }
            Ok(r)
        }
        LemmaPart::RunningMin => {
            let mut r = BoundReport::upper("lemma_running_min", tol);
            let mut best = f64::INFINITY;
            for k in 0..n {
                let prev = best;
                best = best.min(c.a[k]);
                debug_assert!(best <= prev);
                r.push(k, weighted[k], big[k] * best);
            }
            Ok(r)
        }
    }
}

/// Ergodic objective band `[-2 ||z0-z*|| ||z*-x*|| / (gamma Lambda_k), ||z0-x*||^2 / (4 gamma Lambda_k)]`.
pub fn ergodic_objective_bounds(cert: &SolutionCertificate, big_lambda_k: f64) -> (f64, f64) {
    let g = cert.gamma;
    (
        -2.0 * cert.dist0 * cert.shift_norm() / (g * big_lambda_k),
        cert.dist0_xstar * cert.dist0_xstar / (4.0 * g * big_lambda_k),
    )
}

/// `||xbar_g - xbar_f|| <= 2 ||z0 - z*|| / Lambda_k`
pub fn ergodic_feasibility_bound(dist0: f64, big_lambda_k: f64) -> f64 {
    2.0 * dist0 / big_lambda_k
}

/// `||x_g - x_f||^2 <= ||z0 - z*||^2 / (4 tau_floor (k+1))`
pub fn nonergodic_feasibility_bound(dist0: f64, tau_floor: f64, k: usize) -> f64 {
    dist0 * dist0 / (4.0 * tau_floor * (k + 1) as f64)
}

/// Nonergodic objective band with `d = ||z0 - z*||`, `s = ||z* - x*||`:
/// `[-d s, (d + s) d] / (2 gamma sqrt(tau_floor (k+1)))`.
pub fn nonergodic_objective_bounds(cert: &SolutionCertificate, tau_floor: f64, k: usize) -> (f64, f64) {
    let den = 2.0 * cert.gamma * (tau_floor * (k + 1) as f64).sqrt();
    let (d, s) = (cert.dist0, cert.shift_norm());
    (-d * s / den, (d + s) * d / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Ergodic,
    Nonergodic,
}

/// Band for `f + g` evaluated at one point when one of them is `L`-Lipschitz.
/// Ergodic: `||z0-x*||^2/(4 gamma Lambda_k) + 2 L ||z0-z*|| / Lambda_k`.
/// Nonergodic: `(d + s + gamma L) d / (2 gamma sqrt(tau_floor (k+1)))`.
pub fn lipschitz_objective_bounds(cert: &SolutionCertificate, table: &ScheduleTable, k: usize, lipschitz: f64, mode: Averaging) -> (f64, f64) {
    match mode {
        Averaging::Ergodic => {
            let (_, hi) = ergodic_objective_bounds(cert, table.big_lambda[k]);
            (0.0, hi + 2.0 * lipschitz * cert.dist0 / table.big_lambda[k])
        }
        Averaging::Nonergodic => {
            let den = 2.0 * cert.gamma * (table.tau_floor[k] * (k + 1) as f64).sqrt();
            let (d, s) = (cert.dist0, cert.shift_norm());
            (0.0, (d + s + cert.gamma * lipschitz) * d / den)
        }
    }
}

/// FBS bounds at iteration `k`:
/// `h(z^{k+1}) - h* <= C ||z0 - x*||^2 / (k+1)` and
/// `||T z^{k+1} - z^{k+1}||^2 <= C ||z0 - x*||^2 / ((1/gamma - 1/(2 beta)) (k+1)^2)`.
pub fn fbs_bounds(cfg: &FbsConfig, dist0_xstar: f64, k: usize) -> (f64, f64) {
    let c = cfg.objective_constant() * dist0_xstar * dist0_xstar;
    let kp = (k + 1) as f64;
    (c / kp, c / (cfg.descent_factor() * kp * kp))
}

/// Slope and intercept of `ln s_k` against `ln(k+1)` over `[k_lo, k_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub k_lo: usize,
    pub k_hi: usize,
}

/// Iterations skipped before fitting a decay exponent.
pub const FIT_BURN_IN: usize = 10;

pub fn fit_decay_exponent(series: &[f64], k_lo: usize, k_hi: usize) -> Result<RateFit> {
    if k_lo < 1 || k_lo >= k_hi || k_hi >= series.len() {
        return invalid(format!("fit window [{k_lo}, {k_hi}] invalid for {} samples", series.len()));
    }
    let pts: Vec<(f64, f64)> = (k_lo..=k_hi).map(|k| (((k + 1) as f64).ln(), series[k])).collect();
    if pts.iter().any(|&(_, s)| !(s > 0.0)) {
        return invalid("decay fit needs positive samples");
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let exponent = sxy / sxx;
    Ok(RateFit { exponent, intercept: my - exponent * mx, k_lo, k_hi })
}

/// The upper fundamental inequality at `x = x*`,
/// `4 gamma lambda (f(x_f) + g(x_g) - f* - g*) <= ||z - x*||^2 - ||z+ - x*||^2 + (1 - 1/lambda) ||z+ - z||^2`,
/// and the lower one,
/// `f(x_f) + g(x_g) - f* - g* >= <x_g - x_f, z* - x*> / gamma`.
pub fn check_fundamental_inequalities(trace: &IterationTrace, cert: &SolutionCertificate, tol: Tolerance) -> Result<CheckSuite> {
    let gamma = cert.gamma;
    let shift = &cert.zstar - &cert.xstar;
    let mut up = BoundReport::upper("fundamental_upper", tol);
    let mut lo = BoundReport::lower("fundamental_lower", tol);
    for w in trace.records.windows(2) {
        let (r, next) = (&w[0], &w[1]);
        let (z, zn, tri, obj) = match (&r.z, &next.z, &r.triangle, r.objective) {
            (Some(z), Some(zn), Some(t), Some(o)) => (z, zn, t, o),
            _ => return invalid("fundamental inequalities need iterates, triangle points and objective values"),
        };
        let gap = obj - cert.obj_star;
        let l = r.lambda;
        let rhs = z.dist_sq(&cert.xstar) - zn.dist_sq(&cert.xstar) + (1.0 - 1.0 / l) * zn.dist_sq(z);
        up.push(r.k, rhs, 4.0 * gamma * l * gap);
        lo.push(r.k, (&tri.x_g - &tri.x_f).dot(&shift) / gamma, gap);
    }
    let mut s = CheckSuite::new();
    s.add(up);
    s.add(lo);
    Ok(s)
}

/// Ergodic objective band and ergodic feasibility bound along a PRS trace.
pub fn check_ergodic_bands(trace: &IterationTrace, cert: &SolutionCertificate, table: &ScheduleTable, tol: Tolerance) -> Result<CheckSuite> {
    let mut hi = BoundReport::upper("ergodic_objective_upper", tol);
    let mut lo = BoundReport::lower("ergodic_objective_lower", tol);
    let mut feas = BoundReport::upper("ergodic_feasibility", tol);
    for r in &trace.records {
        let bl = table.big_lambda[r.k];
        if let Some(o) = r.ergodic_objective {
            let (b_lo, b_hi) = ergodic_objective_bounds(cert, bl);
            hi.push(r.k, b_hi, o - cert.obj_star);
            lo.push(r.k, b_lo, o - cert.obj_star);
        }
        match r.ergodic_feas_gap {
            Some(gap) => feas.push(r.k, ergodic_feasibility_bound(cert.dist0, bl), gap),
            None => return invalid("trace has no ergodic averages"),
        }
    }
    let mut s = CheckSuite::new();
    s.add(hi);
    s.add(lo);
    s.add(feas);
    Ok(s)
}

/// Nonergodic objective band along a PRS trace.
pub fn check_nonergodic_bands(trace: &IterationTrace, cert: &SolutionCertificate, table: &ScheduleTable, tol: Tolerance) -> Result<CheckSuite> {
    let mut hi = BoundReport::upper("nonergodic_objective_upper", tol);
    let mut lo = BoundReport::lower("nonergodic_objective_lower", tol);
    for r in &trace.records {
        let o = r.objective.ok_or_else(|| crate::Error::InvalidArgument("trace has no objective values".into()))?;
        let (b_lo, b_hi) = nonergodic_objective_bounds(cert, table.tau_floor[r.k], r.k);
        hi.push(r.k, b_hi, o - cert.obj_star);
        lo.push(r.k, b_lo, o - cert.obj_star);
    }
    let mut s = CheckSuite::new();
    s.add(hi);
    s.add(lo);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_part_on_harmonic_like_sequence() {
        let n = 2000;
        let a: Vec<f64> = (0..n).map(|k| 1.0 / ((k + 1) as f64).powi(2)).collect();
        let c = SequenceCheck::new(LemmaPart::Monotone, a, vec![1.0; n]);
        let r = verify_summable_lemma(&c, Tolerance::DEFAULT).unwrap();
        assert!(r.passed());
        // (k+1) a_k = 1/(k+1) <= sum 1/(i+1)^2 < pi^2/6
        assert!(r.entries[0].bound < std::f64::consts::PI.powi(2) / 6.0);
    }

    #[test]
    fn telescoping_equality_in_the_limit() {
        let n = 60;
        let b: Vec<f64> = (0..=n).map(|k| 0.5f64.powi(k as i32)).collect();
        let a: Vec<f64> = (0..n).map(|k| b[k] - b[k + 1]).collect();
        let c = SequenceCheck::new(LemmaPart::Telescoping, a, vec![1.0; n]).with_b(b).with_errors(vec![0.0; n]);
        let r = verify_summable_lemma(&c, Tolerance::DEFAULT).unwrap();
        assert!(r.passed());
        let last = r.entries.last().unwrap();
        assert!((last.bound - 2.0).abs() < 1e-12 && (last.measured - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_entries_rejected() {
        let c = SequenceCheck::new(LemmaPart::RunningMin, vec![1.0, -1.0], vec![1.0, 1.0]);
        assert!(verify_summable_lemma(&c, Tolerance::DEFAULT).is_err());
    }

    #[test]
    fn fit_recovers_exponent() {
        let s: Vec<f64> = (0..500).map(|k| 3.0 / (k as f64 + 1.0)).collect();
        let f = fit_decay_exponent(&s, 10, 499).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit_decay_exponent(&s, 0, 10).is_err());
    }

    #[test]
    fn fbs_bound_values() {
        let cfg = FbsConfig::new(1.5, 1.0).unwrap();
        let (obj, fpr) = fbs_bounds(&cfg, 1.0, 0);
        assert!((obj - 1.0).abs() < 1e-14);
        assert!((fpr - 1.0 / (1.0 / 1.5 - 0.5)).abs() < 1e-12);
    }
}
