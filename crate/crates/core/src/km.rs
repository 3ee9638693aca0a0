//! Krasnosel'skii-Mann iterations `z+ = (1 - l) z + l T z + l e`, relaxation
//! schedules, iteration traces and the fixed-point residual checks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::Vector;
use crate::prox::TriangleIterate;
use crate::report::{BoundReport, Tolerance};

/// Relaxation parameters `lambda_k` in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationSchedule {
    Constant(f64),
    Explicit(Vec<f64>),
    /// `lambda_k = scale * (k + 1)^(-power)`
    Polynomial { scale: f64, power: f64 },
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        RelaxationSchedule::Constant(0.5)
    }
}

impl RelaxationSchedule {
    /// `lambda_k`; an explicit list repeats its last entry past its end.
    pub fn lambda(&self, k: usize) -> f64 {
        match self {
            RelaxationSchedule::Constant(l) => *l,
            RelaxationSchedule::Explicit(v) => v[k.min(v.len().saturating_sub(1))],
            RelaxationSchedule::Polynomial { scale, power } => scale * ((k + 1) as f64).powf(-power),
        }
    }

    /// Check `lambda_k` in `(0, 1]` for `k <= horizon`.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if let RelaxationSchedule::Explicit(v) = self {
            if v.len() < horizon + 1 {
                return invalid(format!("explicit schedule has {} entries, horizon needs {}", v.len(), horizon + 1));
            }
        }
        let check = |l: f64| l > 0.0 && l <= 1.0;
        let ok = match self {
            RelaxationSchedule::Constant(l) => check(*l),
            RelaxationSchedule::Explicit(v) => v[..=horizon].iter().all(|&l| check(l)),
            RelaxationSchedule::Polynomial { scale, power } => {
                *power >= 0.0 && check(*scale) && check(self.lambda(horizon))
            }
        };
        if !ok {
            return invalid("relaxation parameters must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn tabulate(&self, horizon: usize) -> Result<ScheduleTable> {
        self.validate(horizon)?;
        let mut t = ScheduleTable {
            lambda: Vec::with_capacity(horizon + 1),
            big_lambda: Vec::with_capacity(horizon + 1),
            tau_sum: Vec::with_capacity(horizon + 1),
            tau_floor: Vec::with_capacity(horizon + 1),
        };
        let (mut cum, mut tsum, mut tmin) = (0.0, 0.0, f64::INFINITY);
        for k in 0..=horizon {
            let l = self.lambda(k);
            let tau = l * (1.0 - l);
            cum += l;
            tsum += tau;
            tmin = tmin.min(tau);
            t.lambda.push(l);
            t.big_lambda.push(cum);
            t.tau_sum.push(tsum);
            t.tau_floor.push(tmin);
        }
        Ok(t)
    }
}

/// Prefix quantities of a schedule up to a horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleTable {
    pub lambda: Vec<f64>,
    /// `Lambda_k = sum_{i<=k} lambda_i`
    pub big_lambda: Vec<f64>,
    /// `sum_{i<=k} lambda_i (1 - lambda_i)`
    pub tau_sum: Vec<f64>,
    /// `min_{i<=k} lambda_i (1 - lambda_i)`
    pub tau_floor: Vec<f64>,
}

impl ScheduleTable {
    pub fn tau(&self, k: usize) -> f64 {
        self.lambda[k] * (1.0 - self.lambda[k])
    }

    pub fn horizon(&self) -> usize {
        self.lambda.len() - 1
    }
}

/// `||T z^k - z^k||^2 <= ||z0 - z*||^2 / sum_{i<=k} tau_i`; infinite while the sum is zero.
pub fn fpr_bound(table: &ScheduleTable, dist0_sq: f64, k: usize) -> f64 {
    let s = table.tau_sum[k];
    if s > 0.0 {
        dist0_sq / s
    } else {
        f64::INFINITY
    }
}

pub type ErrorGenerator = Box<dyn Fn(usize, usize) -> Vector + Send + Sync>;
pub type Envelope = Box<dyn Fn(usize) -> f64 + Send + Sync>;

/// Additive errors `e^k` with an envelope `omega_k >= lambda_k ||e^k||`.
pub struct ErrorSchedule {
    pub generator: ErrorGenerator,
    pub envelope: Envelope,
}

impl ErrorSchedule {
    pub fn new(generator: ErrorGenerator, envelope: Envelope) -> Self {
        ErrorSchedule { generator, envelope }
    }

    /// Error-free schedule.
    pub fn none() -> Self {
        ErrorSchedule { generator: Box::new(|_, n| Vector::zeros(n)), envelope: Box::new(|_| 0.0) }
    }

    /// Verify the envelope is nonnegative, nonincreasing and dominates
    /// `lambda_k ||e^k||` up to the horizon.
    pub fn validate(&self, schedule: &RelaxationSchedule, dim: usize, horizon: usize) -> Result<()> {
        let mut prev = f64::INFINITY;
        for k in 0..=horizon {
            let w = (self.envelope)(k);
            if !(w >= 0.0) || w > prev * (1.0 + 1e-12) {
                return invalid(format!("error envelope must be nonnegative and nonincreasing (k = {k})"));
            }
            prev = w;
            let e = (self.generator)(k, dim);
            if schedule.lambda(k) * e.norm() > w * (1.0 + 1e-12) + 1e-300 {
                return invalid(format!("error at k = {k} exceeds its envelope"));
            }
        }
        Ok(())
    }
}

/// One row of an iteration trace. Fields that a driver does not produce stay `None`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub lambda: f64,
    pub z: Option<Vector>,
    /// `||T z^k - z^k||^2` for the base operator `T`.
    pub fpr: f64,
    /// `||z^k - z*||^2` when a reference point was supplied.
    pub dist_sq: Option<f64>,
    /// `||T z^k - z*||`, used by the inexact bound.
    pub image_dist: Option<f64>,
    /// `||e^k||`
    pub error_norm: Option<f64>,
    pub triangle: Option<TriangleIterate>,
    /// Nonergodic objective value (`f(x_f) + g(x_g)` for PRS, `h(z)` for FBS).
    pub objective: Option<f64>,
    /// `||x_g - x_f||`
    pub feas_gap: Option<f64>,
    pub xbar_g: Option<Vector>,
    pub xbar_f: Option<Vector>,
    pub ergodic_objective: Option<f64>,
    /// `||xbar_g - xbar_f||`
    pub ergodic_feas_gap: Option<f64>,
}

/// Records `k = 0..=iters` of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterRecord>,
    pub gamma: Option<f64>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fpr(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.fpr).collect()
    }

    pub fn last_z(&self) -> Option<&Vector> {
        self.records.last().and_then(|r| r.z.as_ref())
    }
}

/// Options shared by the iteration drivers.
#[derive(Clone, Debug, Default)]
pub struct TraceOptions {
    pub reference: Option<Vector>,
    /// Drop per-iteration vectors (iterates, triangle points, averages) to save memory.
    pub scalars_only: bool,
}

impl TraceOptions {
    pub fn with_reference(reference: Vector) -> Self {
        TraceOptions { reference: Some(reference), scalars_only: false }
    }

    pub fn scalars_only(mut self) -> Self {
        self.scalars_only = true;
        self
    }
}

/// Nonexpansive map on `R^n`.
pub trait Operator {
    fn apply(&self, z: &Vector) -> Result<Vector>;
}

impl<F: Fn(&Vector) -> Result<Vector>> Operator for F {
    fn apply(&self, z: &Vector) -> Result<Vector> {
        self(z)
    }
}

/// `(1 - lambda) z + lambda (T z + e)`
pub fn km_step(t: &dyn Operator, lambda: f64, z: &Vector, e: Option<&Vector>) -> Result<Vector> {
    let tz = t.apply(z)?;
    Ok(relax(z, &tz, lambda, e))
}

fn relax(z: &Vector, tz: &Vector, lambda: f64, e: Option<&Vector>) -> Vector {
    let mut out = Vector::lincomb(1.0 - lambda, z, lambda, tz);
    if let Some(e) = e {
        out.axpy(lambda, e);
    }
    out
}

/// Run `iters` KM steps from `z0`, optionally injecting errors.
pub fn run_km(
    t: &dyn Operator,
    schedule: &RelaxationSchedule,
    z0: &Vector,
    iters: usize,
    errors: Option<&ErrorSchedule>,
    opts: &TraceOptions,
) -> Result<IterationTrace> {
    schedule.validate(iters)?;
    if let Some(r) = &opts.reference {
        if r.dim() != z0.dim() {
            return invalid("reference point dimension mismatch");
        }
    }
    let mut trace = IterationTrace { records: Vec::with_capacity(iters + 1), gamma: None };
    let mut z = z0.clone();
    for k in 0..=iters {
        let tz = t.apply(&z)?;
        if !tz.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }
        let lambda = schedule.lambda(k);
        let e = errors.map(|es| (es.generator)(k, z.dim()));
        trace.records.push(IterRecord {
            k,
            lambda,
            z: (!opts.scalars_only).then(|| z.clone()),
            fpr: tz.dist_sq(&z),
            dist_sq: opts.reference.as_ref().map(|r| z.dist_sq(r)),
            image_dist: opts.reference.as_ref().map(|r| tz.dist(r)),
            error_norm: e.as_ref().map(Vector::norm),
            ..Default::default()
        });
        if k < iters {
            z = relax(&z, &tz, lambda, e.as_ref());
        }
    }
    Ok(trace)
}

fn dist_series(trace: &IterationTrace) -> Result<Vec<f64>> {
    trace
        .records
        .iter()
        .map(|r| r.dist_sq.ok_or_else(|| Error::InvalidArgument("trace has no reference distances".into())))
        .collect()
}

/// `fpr_k <= ||z0 - z*||^2 / sum_{i<=k} tau_i` for every record.
pub fn check_fpr_bound(trace: &IterationTrace, table: &ScheduleTable, dist0_sq: f64, tol: Tolerance) -> BoundReport {
    let mut r = BoundReport::upper("fpr_bound", tol);
    for rec in &trace.records {
        r.push(rec.k, fpr_bound(table, dist0_sq, rec.k), rec.fpr);
    }
    r
}

/// `||z^{k+1} - z*|| <= ||z^k - z*||`
pub fn check_fejer(trace: &IterationTrace, tol: Tolerance) -> Result<BoundReport> {
    let d = dist_series(trace)?;
    let mut r = BoundReport::upper("fejer", tol);
    for k in 1..d.len() {
        r.push(k, d[k - 1], d[k]);
    }
    Ok(r)
}

/// `fpr_{k+1} <= fpr_k`
pub fn check_fpr_monotone(trace: &IterationTrace, tol: Tolerance) -> BoundReport {
    let mut r = BoundReport::upper("fpr_monotone", tol);
    for w in trace.records.windows(2) {
        r.push(w[1].k, w[0].fpr, w[1].fpr);
    }
    r
}

/// `sum_{i<=k} tau_i fpr_i <= ||z0 - z*||^2`
pub fn check_fpr_summability(trace: &IterationTrace, table: &ScheduleTable, dist0_sq: f64, tol: Tolerance) -> BoundReport {
    let mut r = BoundReport::upper("fpr_summability", tol);
    let mut s = 0.0;
    for rec in &trace.records {
        s += table.tau(rec.k) * rec.fpr;
        r.push(rec.k, dist0_sq, s);
    }
    r
}

/// FPR bound for the inexact iteration.
///
/// With `a_k = fpr_k`, `a_{k+1} <= a_k + eps_k` where `eps_k = (lambda_k^2/tau_k) ||e^k||^2`, and
/// `sum_{i<=k} tau_i a_i <= ||z0 - z*||^2 + sum_{i<=k} xi_i` where
/// `xi_i = lambda_i^2 ||e^i||^2 + 2 lambda_i ||T z^i - z*|| ||e^i|| + 2 tau_i sqrt(a_i) ||e^i||`.
/// Weighting by `tau_i` and summing the first inequality gives
/// `a_k <= (||z0 - z*||^2 + sum_{i<=k} xi_i + sum_{i<k} S_i eps_i) / S_k` with `S_k = sum_{i<=k} tau_i`.
pub fn check_inexact_fpr_bound(trace: &IterationTrace, table: &ScheduleTable, dist0_sq: f64, tol: Tolerance) -> Result<BoundReport> {
    let mut r = BoundReport::upper("inexact_fpr_bound", tol);
    let (mut xi_sum, mut eps_weighted) = (0.0, 0.0);
    for rec in &trace.records {
        let k = rec.k;
        let (e, td) = match (rec.error_norm, rec.image_dist) {
            (Some(e), Some(td)) => (e, td),
            _ => return invalid("inexact bound needs error norms and reference distances"),
        };
        let l = table.lambda[k];
        let tau = table.tau(k);
        if tau <= 0.0 {
            return invalid("inexact bound needs lambda_k < 1");
        }
        xi_sum += l * l * e * e + 2.0 * l * td * e + 2.0 * tau * rec.fpr.sqrt() * e;
        let bound = (dist0_sq + xi_sum + eps_weighted) / table.tau_sum[k];
        r.push(k, bound, rec.fpr);
        eps_weighted += table.tau_sum[k] * (l * l / tau) * e * e;
    }
    Ok(r)
}

/// Finite-horizon proxy for `fpr_k = o(1/(k+1))`: the largest `(k+1) fpr_k` over
/// `[K/2, K]` must not exceed the largest over `[K/4, K/2]`.
pub fn check_fpr_tail(trace: &IterationTrace, tol: Tolerance) -> BoundReport {
    let mut r = BoundReport::upper("fpr_tail", tol);
    let kk = trace.records.len().saturating_sub(1);
    if kk < 4 {
        return r;
    }
    let scaled = |lo: usize, hi: usize| {
        trace.records[lo..=hi].iter().map(|r| (r.k + 1) as f64 * r.fpr).fold(0.0, f64::max)
    };
    r.push(kk, scaled(kk / 4, kk / 2), scaled(kk / 2, kk));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_prefix_sums() {
        let t = RelaxationSchedule::Constant(0.5).tabulate(3).unwrap();
        assert_eq!(t.big_lambda, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(t.tau_sum[3], 1.0);
        assert_eq!(fpr_bound(&t, 1.0, 3), 1.0);
    }

    #[test]
    fn schedule_validation() {
        assert!(RelaxationSchedule::Constant(0.0).validate(1).is_err());
        assert!(RelaxationSchedule::Constant(1.2).validate(1).is_err());
        assert!(RelaxationSchedule::Explicit(vec![0.5]).validate(3).is_err());
        assert!(RelaxationSchedule::Polynomial { scale: 1.0, power: 0.5 }.validate(100).is_ok());
    }

    #[test]
    fn fpr_bound_infinite_for_unit_lambda() {
        let t = RelaxationSchedule::Constant(1.0).tabulate(2).unwrap();
        assert_eq!(fpr_bound(&t, 1.0, 2), f64::INFINITY);
    }

    #[test]
    fn rotation_by_quarter_turn() {
        // T = rotation by pi/2 in R^2, fixed point 0; lambda = 1/2.
        let t = |z: &Vector| Ok(Vector(vec![-z[1], z[0]]));
        let trace = run_km(&t, &RelaxationSchedule::Constant(0.5), &Vector(vec![1.0, 0.0]), 50, None, &TraceOptions::with_reference(Vector::zeros(2))).unwrap();
        assert_eq!(trace.len(), 51);
        let table = RelaxationSchedule::Constant(0.5).tabulate(50).unwrap();
        assert!(check_fpr_bound(&trace, &table, 1.0, Tolerance::DEFAULT).passed());
        assert!(check_fejer(&trace, Tolerance::DEFAULT).unwrap().passed());
        assert!(check_fpr_monotone(&trace, Tolerance::DEFAULT).passed());
        assert!(check_fpr_summability(&trace, &table, 1.0, Tolerance::DEFAULT).passed());
        // ||T_{1/2} z|| = ||z|| / sqrt(2) for this rotation
        let d = trace.records[10].dist_sq.unwrap();
        assert!((d - 0.5f64.powi(10)).abs() < 1e-15);
    }

    #[test]
    fn envelope_must_dominate_errors() {
        let es = ErrorSchedule::new(Box::new(|_, n| Vector(vec![1.0; n])), Box::new(|_| 0.1));
        assert!(es.validate(&RelaxationSchedule::Constant(0.5), 2, 3).is_err());
        let es = ErrorSchedule::new(Box::new(|k, n| Vector(vec![1.0 / (k as f64 + 1.0); n])), Box::new(|k| 1.0 / (k as f64 + 1.0)));
        assert!(es.validate(&RelaxationSchedule::Constant(0.5), 1, 10).is_ok());
    }
}
