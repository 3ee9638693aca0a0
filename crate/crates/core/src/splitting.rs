//! Relaxed Peaceman-Rachford / Douglas-Rachford, forward-backward splitting
//! and the proximal point method, with reference solutions.

use crate::error::{invalid, Error, Result};
use crate::km::{IterRecord, IterationTrace, RelaxationSchedule, TraceOptions};
use crate::linalg::Vector;
use crate::prox::{PreparedProx, ProxFunction, TriangleIterate};

/// Reference runs stop once the fixed-point residual drops below this.
pub const REFERENCE_TARGET: f64 = 1e-13;
/// A reference point is accepted when its residual is at most this.
pub const REFERENCE_ACCEPT: f64 = 1e-8;

pub type PrsObserver<'o> = Box<dyn FnMut(usize, &Vector, &TriangleIterate) + 'o>;

/// Running weighted average `xbar^k = (1/Lambda_k) sum_{i<=k} lambda_i x^i`.
#[derive(Clone, Debug, Default)]
pub struct ErgodicAverage {
    mean: Option<Vector>,
    weight: f64,
}

impl ErgodicAverage {
    pub fn push(&mut self, lambda: f64, x: &Vector) -> &Vector {
        self.weight += lambda;
        let w = lambda / self.weight;
        match &mut self.mean {
            Some(m) => {
                for (mi, xi) in m.0.iter_mut().zip(&x.0) {
                    *mi += w * (xi - *mi);
                }
            }
            None => self.mean = Some(x.clone()),
        }
        self.mean.as_ref().unwrap()
    }

    pub fn value(&self) -> Option<&Vector> {
        self.mean.as_ref()
    }
}

/// Weighted running averages of a sequence of points.
pub fn ergodic_average(points: &[Vector], lambdas: &[f64]) -> Vec<Vector> {
    let mut acc = ErgodicAverage::default();
    points.iter().zip(lambdas).map(|(x, &l)| acc.push(l, x).clone()).collect()
}

fn sum_eval(f: &ProxFunction, x: &Vector, g: &ProxFunction, y: &Vector) -> Result<Option<f64>> {
    if f.can_eval() && g.can_eval() {
        Ok(Some(f.eval(x)? + g.eval(y)?))
    } else {
        Ok(None)
    }
}

/// Relaxed PRS driver: `z+ = (1 - lambda) z + lambda refl_f refl_g z`.
pub struct PrsRunner<'a, 'o> {
    f: &'a ProxFunction,
    g: &'a ProxFunction,
    gamma: f64,
    schedule: RelaxationSchedule,
    opts: TraceOptions,
    ergodic: bool,
    objective: bool,
    observer: Option<PrsObserver<'o>>,
}

impl<'a, 'o> PrsRunner<'a, 'o> {
    pub fn new(f: &'a ProxFunction, g: &'a ProxFunction, gamma: f64) -> Self {
        PrsRunner {
            f,
            g,
            gamma,
            schedule: RelaxationSchedule::default(),
            opts: TraceOptions::default(),
            ergodic: true,
            objective: true,
            observer: None,
        }
    }

    pub fn schedule(mut self, s: RelaxationSchedule) -> Self {
        self.schedule = s;
        self
    }

    pub fn options(mut self, opts: TraceOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn reference(mut self, zstar: Vector) -> Self {
        self.opts.reference = Some(zstar);
        self
    }

    pub fn scalars_only(mut self) -> Self {
        self.opts.scalars_only = true;
        self
    }

    /// Skip ergodic averages.
    pub fn no_ergodic(mut self) -> Self {
        self.ergodic = false;
        self
    }

    /// Skip objective evaluation.
    pub fn no_objective(mut self) -> Self {
        self.objective = false;
        self
    }

    /// Called with `(k, z^k, triangle at z^k)` for every record.
    pub fn observe(mut self, obs: impl FnMut(usize, &Vector, &TriangleIterate) + 'o) -> Self {
        self.observer = Some(Box::new(obs));
        self
    }

    pub fn run(mut self, z0: &Vector, iters: usize) -> Result<IterationTrace> {
        self.schedule.validate(iters)?;
        let pf = self.f.prepare(self.gamma)?;
        let pg = self.g.prepare(self.gamma)?;
        let mut trace = IterationTrace { records: Vec::with_capacity(iters + 1), gamma: Some(self.gamma) };
        let (mut avg_g, mut avg_f) = (ErgodicAverage::default(), ErgodicAverage::default());
        let mut z = z0.clone();
        for k in 0..=iters {
            let tri = TriangleIterate::compute(&pf, &pg, &z).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { iteration: k },
                e => e,
            })?;
            let lambda = self.schedule.lambda(k);
            let diff = &tri.x_f - &tri.x_g;
            let mut rec = IterRecord {
                k,
                lambda,
                fpr: 4.0 * diff.norm_sq(),
                feas_gap: Some(diff.norm()),
                dist_sq: self.opts.reference.as_ref().map(|r| z.dist_sq(r)),
                ..Default::default()
            };
            if let Some(r) = &self.opts.reference {
                rec.image_dist = Some(tri.prs_image(&z).dist(r));
            }
            if self.objective {
                rec.objective = sum_eval(self.f, &tri.x_f, self.g, &tri.x_g)?;
            }
            if self.ergodic {
                let xg = avg_g.push(lambda, &tri.x_g);
                let xf = avg_f.push(lambda, &tri.x_f);
                rec.ergodic_feas_gap = Some(xg.dist(xf));
                if self.objective {
                    rec.ergodic_objective = sum_eval(self.f, xf, self.g, xg)?;
                }
                if !self.opts.scalars_only {
                    rec.xbar_g = Some(xg.clone());
                    rec.xbar_f = Some(xf.clone());
                }
            }
            if let Some(obs) = self.observer.as_mut() {
                obs(k, &z, &tri);
            }
            let next = (k < iters).then(|| {
                let mut zn = z.clone();
                zn.axpy(2.0 * lambda, &diff);
                zn
            });
            if !self.opts.scalars_only {
                rec.z = Some(z);
                rec.triangle = Some(tri);
            }
            trace.records.push(rec);
            match next {
                Some(zn) => z = zn,
                None => break,
            }
        }
        Ok(trace)
    }
}

/// Relaxed PRS with default recording (vectors, objective, ergodic averages).
pub fn run_relaxed_prs(
    f: &ProxFunction,
    g: &ProxFunction,
    gamma: f64,
    schedule: &RelaxationSchedule,
    z0: &Vector,
    iters: usize,
) -> Result<IterationTrace> {
    PrsRunner::new(f, g, gamma).schedule(schedule.clone()).run(z0, iters)
}

/// A fixed point `z*` of `T_PRS` and the quantities derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionCertificate {
    pub gamma: f64,
    pub zstar: Vector,
    /// `x* = prox_{gamma g}(z*)`, a minimizer of `f + g`.
    pub xstar: Vector,
    /// `f(x*) + g(x*)`
    pub obj_star: f64,
    /// `||z0 - z*||`
    pub dist0: f64,
    /// `||z0 - x*||`
    pub dist0_xstar: f64,
    /// `||z* - x*|| / gamma`
    pub dual_norm: f64,
    /// `||T_PRS z* - z*||`
    pub residual: f64,
}

impl SolutionCertificate {
    /// Validate `zstar` as a fixed point and derive the rest.
    pub fn from_fixed_point(f: &ProxFunction, g: &ProxFunction, gamma: f64, zstar: Vector, z0: &Vector) -> Result<Self> {
        let pf = f.prepare(gamma)?;
        let pg = g.prepare(gamma)?;
        let tri = TriangleIterate::compute(&pf, &pg, &zstar)?;
        let residual = 2.0 * tri.x_f.dist(&tri.x_g);
        if residual > REFERENCE_ACCEPT * zstar.norm().max(1.0) {
            return Err(Error::NonConvergence { budget: 0, residual });
        }
        // x_f and x_g agree to the residual; an indicator may still reject x_g itself
        let mut obj_star = f.eval(&tri.x_g).unwrap_or(f64::NAN) + g.eval(&tri.x_g).unwrap_or(f64::NAN);
        if obj_star.is_infinite() {
            obj_star = f.eval(&tri.x_f).unwrap_or(f64::NAN) + g.eval(&tri.x_g).unwrap_or(f64::NAN);
        }
        let xstar = tri.x_g;
        Ok(SolutionCertificate {
            gamma,
            dist0: z0.dist(&zstar),
            dist0_xstar: z0.dist(&xstar),
            dual_norm: zstar.dist(&xstar) / gamma,
            zstar,
            xstar,
            obj_star,
            residual,
        })
    }

    /// `||z* - x*||`
    pub fn shift_norm(&self) -> f64 {
        self.gamma * self.dual_norm
    }
}

/// Run DRS from `z0` until the residual reaches `REFERENCE_TARGET` or stops
/// improving, and certify the final point.
pub fn fixed_point_reference(f: &ProxFunction, g: &ProxFunction, gamma: f64, z0: &Vector, budget: usize) -> Result<SolutionCertificate> {
    let pf = f.prepare(gamma)?;
    let pg = g.prepare(gamma)?;
    let mut z = z0.clone();
    let mut best = (f64::INFINITY, z.clone());
    let mut stalled = 0usize;
    for _ in 0..budget {
        let tri = TriangleIterate::compute(&pf, &pg, &z)?;
        let diff = &tri.x_f - &tri.x_g;
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
    }
    if best.0 > REFERENCE_ACCEPT * best.1.norm().max(1.0) {
        return Err(Error::NonConvergence { budget, residual: best.0 });
    }
    SolutionCertificate::from_fixed_point(f, g, gamma, best.1, z0)
}

/// Step size for forward-backward splitting; requires `gamma < 2 beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FbsConfig {
    pub gamma: f64,
    pub beta: f64,
}

impl FbsConfig {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(beta > 0.0) || !(gamma < 2.0 * beta) {
            return invalid(format!("FBS needs 0 < gamma < 2 beta (gamma = {gamma}, beta = {beta})"));
        }
        Ok(FbsConfig { gamma, beta })
    }

    /// Averagedness of `T_FBS`: `2 beta / (4 beta - gamma)`.
    pub fn alpha(&self) -> f64 {
        if self.beta.is_infinite() {
            0.5
        } else {
            2.0 * self.beta / (4.0 * self.beta - self.gamma)
        }
    }

    /// Constant `C` in `h(z^{k+1}) - h* <= C ||z0 - x*||^2 / (k + 1)`.
    pub fn objective_constant(&self) -> f64 {
        let base = 1.0 / (2.0 * self.gamma);
        if self.gamma <= self.beta {
            base
        } else {
            let a = self.alpha();
            base + (1.0 / (2.0 * self.beta) - base) * a / (1.0 - a)
        }
    }

    /// `1/gamma - 1/(2 beta)`
    pub fn descent_factor(&self) -> f64 {
        1.0 / self.gamma - if self.beta.is_infinite() { 0.0 } else { 1.0 / (2.0 * self.beta) }
    }
}

struct Fbs<'a> {
    pf: PreparedProx<'a>,
    g: &'a ProxFunction,
    gamma: f64,
}

impl Fbs<'_> {
    fn apply(&self, z: &Vector) -> Result<Vector> {
        let grad = self.g.gradient(z)?;
        self.pf.apply(&Vector::lincomb(1.0, z, -self.gamma, &grad))
    }
}

/// `z+ = prox_{gamma f}(z - gamma grad g(z))` with `h = f + g`.
pub fn run_fbs(f: &ProxFunction, g: &ProxFunction, gamma: f64, z0: &Vector, iters: usize, opts: &TraceOptions) -> Result<IterationTrace> {
    let beta = g.beta().ok_or_else(|| Error::Unsupported(format!("FBS needs a smooth g, got {}", g.kind_name())))?;
    FbsConfig::new(gamma, beta)?;
    let op = Fbs { pf: f.prepare(gamma)?, g, gamma };
    let mut trace = IterationTrace { records: Vec::with_capacity(iters + 1), gamma: Some(gamma) };
    let mut z = z0.clone();
    for k in 0..=iters {
        let tz = op.apply(&z)?;
        if !tz.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }
        let objective = sum_eval(f, &z, g, &z)?;
        trace.records.push(IterRecord {
            k,
            lambda: 1.0,
            fpr: tz.dist_sq(&z),
            dist_sq: opts.reference.as_ref().map(|r| z.dist_sq(r)),
            objective,
            z: (!opts.scalars_only).then(|| z.clone()),
            ..Default::default()
        });
        z = tz;
    }
    Ok(trace)
}

/// Proximal point method: FBS with `g = 0`.
pub fn run_ppa(f: &ProxFunction, gamma: f64, z0: &Vector, iters: usize, opts: &TraceOptions) -> Result<IterationTrace> {
    run_fbs(f, &ProxFunction::Zero, gamma, z0, iters, opts)
}

/// A minimizer of `f + g` reached by forward-backward iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerCertificate {
    pub xstar: Vector,
    pub obj_star: f64,
    /// `||z0 - x*||`
    pub dist0: f64,
    pub residual: f64,
}

/// Run FBS from `z0` until `||T z - z||` reaches `REFERENCE_TARGET` or stalls.
pub fn fbs_reference(f: &ProxFunction, g: &ProxFunction, gamma: f64, z0: &Vector, budget: usize) -> Result<MinimizerCertificate> {
    let beta = g.beta().ok_or_else(|| Error::Unsupported("FBS needs a smooth g".into()))?;
    FbsConfig::new(gamma, beta)?;
    let op = Fbs { pf: f.prepare(gamma)?, g, gamma };
    let mut z = z0.clone();
    let mut best = (f64::INFINITY, z.clone());
    for _ in 0..budget {
        let tz = op.apply(&z)?;
        let res = tz.dist(&z);
        if res < best.0 {
            best = (res, z.clone());
        }
        if res <= REFERENCE_TARGET * z.norm().max(1.0) {
            break;
        }
        z = tz;
    }
    if best.0 > REFERENCE_ACCEPT * best.1.norm().max(1.0) {
        return Err(Error::NonConvergence { budget, residual: best.0 });
    }
    let xstar = best.1;
    Ok(MinimizerCertificate { obj_star: f.eval(&xstar)? + g.eval(&xstar)?, dist0: z0.dist(&xstar), xstar, residual: best.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn fbs_constants() {
        let c = FbsConfig::new(1.5, 1.0).unwrap();
        assert!((c.alpha() - 0.8).abs() < 1e-15);
        assert!((c.objective_constant() - 1.0).abs() < 1e-14);
        let c = FbsConfig::new(1.0, 1.0).unwrap();
        assert_eq!(c.objective_constant(), 0.5);
        assert!(FbsConfig::new(2.0, 1.0).is_err());
    }

    #[test]
    fn ppa_on_shifted_square() {
        // f = 1/2 (x - 3)^2, gamma = 1: z+ = (z + 3)/2
        let f = ProxFunction::quadratic(DMatrix::from_element(1, 1, 1.0), Vector::scalar(-3.0), 4.5).unwrap();
        let tr = run_ppa(&f, 1.0, &Vector::scalar(0.0), 3, &TraceOptions::default()).unwrap();
        let zs: Vec<f64> = tr.records.iter().map(|r| r.z.as_ref().unwrap()[0]).collect();
        for (a, b) in zs.iter().zip([0.0, 1.5, 2.25, 2.625]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn fbs_needs_smooth_g() {
        let f = ProxFunction::Zero;
        let g = ProxFunction::l1(1.0).unwrap();
        assert!(matches!(run_fbs(&f, &g, 1.0, &Vector::scalar(0.0), 1, &TraceOptions::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ergodic_average_weights() {
        let pts = vec![Vector::scalar(1.0), Vector::scalar(0.0), Vector::scalar(4.0)];
        let avg = ergodic_average(&pts, &[1.0, 1.0, 2.0]);
        assert_eq!(avg[1][0], 0.5);
        assert_eq!(avg[2][0], 9.0 / 4.0);
    }

    #[test]
    fn reference_for_two_subspaces() {
        let u = crate::linalg::Subspace::coordinate(2, &[0]).unwrap();
        let v = crate::linalg::Subspace::from_basis(2, &[Vector(vec![1.0, 1.0])]).unwrap();
        let f = ProxFunction::indicator_subspace(v);
        let g = ProxFunction::indicator_subspace(u);
        let cert = fixed_point_reference(&f, &g, 1.0, &Vector(vec![1.0, 2.0]), 100_000).unwrap();
        assert!(cert.xstar.norm() < 1e-8);
        assert!(cert.residual < 1e-8);
    }
}
