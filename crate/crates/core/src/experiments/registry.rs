//! Named reproductions with pinned parameters. Each entry maps to one
//! acceptance criterion and returns an outcome whose checks are its predicate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::artifacts::{Outcome, TraceRow};
use super::config::{Algorithm, ExperimentConfig, Z0Spec};
use super::problems::{centered_square, random_lasso_data, slow_rate, AffinePair};
use super::runner::{self, dadmm_checks, fbs_checks, fbs_rows, km_checks, prs_rows, run_experiment};
use crate::admm::{
    admm_reference, check_subgradient_inclusions, check_step_identity, dual_functions, run_relaxed_admm, DistributedProblem, Graph,
    LinearlyConstrainedProblem,
};
use crate::counterexamples::{arbitrarily_slow_setup, distance_lower_setup, optimal_fpr_setup, ppa_diag_setup, AbsExample, SquareExample};
use crate::error::{Error, Result};
use crate::feasibility::{check_feasibility, feasibility_gap_bound, run_feasibility, ConvexSetPair};
use crate::km::{check_fpr_tail, check_inexact_fpr_bound, run_km, ErrorSchedule, IterationTrace, RelaxationSchedule, TraceOptions};
use crate::linalg::{ConvexSet, LinearMap, Subspace, Vector};
use crate::prox::{ProxFunction, QuadraticForm};
use crate::rates::{
    check_ergodic_bands, check_fundamental_inequalities, check_nonergodic_bands, fit_decay_exponent, lipschitz_objective_bounds, verify_summable_lemma,
    Averaging, LemmaPart, SequenceCheck,
};
use crate::report::{BoundReport, CheckSuite, Tolerance};
use crate::splitting::{fixed_point_reference, run_ppa, run_relaxed_prs, FbsConfig, PrsRunner, SolutionCertificate};

/// Expected wall time on a laptop with an optimized build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Runtime {
    /// Under a second.
    Fast,
    /// Under ten seconds.
    Moderate,
    /// Under a minute.
    Slow,
}

impl Runtime {
    pub fn name(&self) -> &'static str {
        match self {
            Runtime::Fast => "fast",
            Runtime::Moderate => "moderate",
            Runtime::Slow => "slow",
        }
    }
}

pub struct ReproductionEntry {
    pub name: &'static str,
    /// Acceptance criterion this entry's predicate covers.
    pub criterion: u8,
    pub summary: &'static str,
    pub runtime: Runtime,
    pub run: fn() -> Result<Outcome>,
}

impl ReproductionEntry {
    /// Run the entry. Errors are recorded in the outcome.
    pub fn execute(&self) -> Outcome {
        let mut out = match (self.run)() {
            Ok(o) => o,
            Err(e) => Outcome::failed(self.name, &e),
        };
        out.name = self.name.to_string();
        out.criterion = Some(self.criterion);
        out
    }
}

pub static REGISTRY: &[ReproductionEntry] = &[
    ReproductionEntry { name: "km-fpr", criterion: 1, summary: "KM on random affine projection pairs: FPR bound, Fejer and summability", runtime: Runtime::Moderate, run: km_fpr },
    ReproductionEntry { name: "km-inexact", criterion: 2, summary: "KM with summable errors: accumulated-error FPR bound and tail decay", runtime: Runtime::Moderate, run: km_inexact },
    ReproductionEntry { name: "optimal-fpr", criterion: 3, summary: "DRS on rotating lines: FPR stays above (k+1)^-1.5", runtime: Runtime::Moderate, run: optimal_fpr },
    ReproductionEntry { name: "arbitrarily-slow", criterion: 4, summary: "DRS slower than h(t) = (t+2)^-0.05", runtime: Runtime::Fast, run: arbitrarily_slow },
    ReproductionEntry { name: "fbs-rates", criterion: 5, summary: "FBS on lasso at gamma = beta and 1.5 beta: objective and FPR rates", runtime: Runtime::Moderate, run: fbs_rates },
    ReproductionEntry { name: "ppa-rates", criterion: 5, summary: "Proximal point on least squares: objective and FPR rates", runtime: Runtime::Fast, run: ppa_rates },
    ReproductionEntry { name: "ppa-lower", criterion: 6, summary: "Proximal point on a diagonal quadratic: FPR and objective lower bounds", runtime: Runtime::Moderate, run: ppa_lower },
    ReproductionEntry { name: "drs-1d", criterion: 7, summary: "Scalar DRS on |x| and |x-1|: FPR below |z0-z*|^2/(2(k+1)^2)", runtime: Runtime::Fast, run: drs_1d },
    ReproductionEntry { name: "abs-ergodic", criterion: 8, summary: "PRS on |x| and 0: ergodic objective and feasibility tightness", runtime: Runtime::Fast, run: abs_ergodic },
    ReproductionEntry { name: "lipschitz-cors", criterion: 8, summary: "PRS on |x| and 0: Lipschitz ergodic bound within 5/2 of measured", runtime: Runtime::Fast, run: lipschitz_cors },
    ReproductionEntry { name: "square-feasibility", criterion: 9, summary: "PRS on two axes: ergodic feasibility gap within a factor two of its bound", runtime: Runtime::Fast, run: square_feasibility },
    ReproductionEntry { name: "ergodic-prs", criterion: 10, summary: "Relaxed PRS on 100 quadratic plus L1 problems: per-step inequalities", runtime: Runtime::Moderate, run: ergodic_prs },
    ReproductionEntry { name: "nonergodic-prs", criterion: 11, summary: "DRS on distance plus indicator: nonergodic objective band", runtime: Runtime::Moderate, run: nonergodic_prs },
    ReproductionEntry { name: "dv-lower", criterion: 11, summary: "DRS on distance plus indicator: decay exponent of d_V(x_g)", runtime: Runtime::Moderate, run: dv_lower },
    ReproductionEntry { name: "distance-indicator-equivalence", criterion: 12, summary: "Distance and indicator pairs give identical DRS traces for large gamma", runtime: Runtime::Fast, run: distance_indicator_equivalence },
    ReproductionEntry { name: "admm-equivalence", criterion: 13, summary: "Relaxed ADMM equals relaxed PRS on the dual", runtime: Runtime::Fast, run: admm_equivalence },
    ReproductionEntry { name: "admm-dual-feas", criterion: 14, summary: "ADMM on lasso: ergodic and nonergodic feasibility bounds", runtime: Runtime::Moderate, run: admm_dual_feas },
    ReproductionEntry { name: "admm-primal", criterion: 14, summary: "ADMM on lasso: objective bands, per-step inequalities and subgradients", runtime: Runtime::Moderate, run: admm_primal },
    ReproductionEntry { name: "distributed-admm", criterion: 15, summary: "Consensus ADMM on a 5-node path with quadratic locals", runtime: Runtime::Fast, run: distributed_admm },
    ReproductionEntry { name: "summable-lemma", criterion: 16, summary: "Summable-sequence lemma on random sequences, all four parts", runtime: Runtime::Fast, run: summable_lemma },
];

pub fn lookup_entry(name: &str) -> Result<&'static ReproductionEntry> {
    REGISTRY.iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        Error::InvalidArgument(format!("unknown reproduction {name}; registry: {}", names.join(", ")))
    })
}

pub fn reproduce(name: &str) -> Result<Outcome> {
    Ok(lookup_entry(name)?.execute())
}

/// One line per entry: name, criterion, runtime class, summary.
pub fn list() -> String {
    let w = REGISTRY.iter().map(|e| e.name.len()).max().unwrap_or(0);
    REGISTRY.iter().map(|e| format!("{:w$}  [{:>2}] {:8}  {}\n", e.name, e.criterion, e.runtime.name(), e.summary)).collect()
}

// Pinned parameters.
const KM_SEEDS: u64 = 50;
const KM_DIM: usize = 20;
const KM_ITERS: usize = 10_000;
const OPT_ALPHA: f64 = 0.75;
const OPT_BLOCKS: usize = 100_000;
const OPT_ITERS: usize = 300;
const RATE_ITERS: usize = 10_000;
const ORACLE_TOL: f64 = 1e-12;

fn tol() -> Tolerance {
    Tolerance::DEFAULT
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn prefixed(prefix: &str, suite: CheckSuite) -> CheckSuite {
    let mut s = CheckSuite::new();
    for mut r in suite.reports {
        r.name = format!("{prefix}/{}", r.name);
        s.add(r);
    }
    s
}

/// Merge same-named reports, keeping every entry.
fn merge_by_name(suites: Vec<CheckSuite>) -> CheckSuite {
    let mut out = CheckSuite::new();
    for s in suites {
        for r in s.reports {
            match out.reports.iter_mut().find(|o| o.name == r.name) {
                Some(o) => o.entries.extend(r.entries),
                None => out.add(r),
            }
        }
    }
    out
}

fn km_rows(trace: &IterationTrace, table: &crate::km::ScheduleTable, d0sq: f64) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow { fpr: Some(r.fpr), dist_sq: r.dist_sq, bound_fpr: Some(crate::km::fpr_bound(table, d0sq, r.k)), ..TraceRow::new(r.k) })
        .collect()
}

fn affine_instance(seed: u64) -> Result<(AffinePair, Vector, Vector)> {
    let pair = AffinePair::random(KM_DIM, 4, 6, seed)?;
    let z0 = Z0Spec::Random { seed: 1000 + seed, scale: 10.0 }.materialize(KM_DIM)?;
    let zstar = pair.common_point(&z0);
    Ok((pair, z0, zstar))
}

fn km_fpr() -> Result<Outcome> {
    let mut out = Outcome::new("km-fpr");
    let sched = RelaxationSchedule::Constant(0.5);
    let table = sched.tabulate(KM_ITERS)?;
    let mut suites = Vec::new();
    for seed in 0..KM_SEEDS {
        let (pair, z0, zstar) = affine_instance(seed)?;
        let t = |z: &Vector| Ok(pair.c1.project(&pair.c2.project(z)));
        let trace = run_km(&t, &sched, &z0, KM_ITERS, None, &TraceOptions::with_reference(zstar.clone()).scalars_only())?;
        let d0sq = z0.dist_sq(&zstar);
        suites.push(km_checks(&trace, &table, d0sq, tol())?);
        if seed == 0 {
            out.rows = km_rows(&trace, &table, d0sq);
        }
    }
    out.suite = merge_by_name(suites);
    out.metric("seeds", KM_SEEDS as f64);
    Ok(out)
}

/// `e^k = (k+1)^-1.5 u_k` with `u_k` a unit vector fixed by `(seed, k)`.
fn decaying_errors(seed: u64, lambda: f64) -> ErrorSchedule {
    ErrorSchedule::new(
        Box::new(move |k, n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            let v = Vector((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
            v.scale(((k + 1) as f64).powf(-1.5) / v.norm())
        }),
        Box::new(move |k| lambda * ((k + 1) as f64).powf(-1.5)),
    )
}

fn km_inexact() -> Result<Outcome> {
    let mut out = Outcome::new("km-inexact");
    let sched = RelaxationSchedule::Constant(0.5);
    let table = sched.tabulate(KM_ITERS)?;
    let mut suites = Vec::new();
    for seed in 0..KM_SEEDS {
        let (pair, z0, zstar) = affine_instance(seed)?;
        let errors = decaying_errors(seed, 0.5);
        errors.validate(&sched, KM_DIM, KM_ITERS)?;
        let t = |z: &Vector| Ok(pair.c1.project(&pair.c2.project(z)));
        let trace = run_km(&t, &sched, &z0, KM_ITERS, Some(&errors), &TraceOptions::with_reference(zstar.clone()).scalars_only())?;
        let d0sq = z0.dist_sq(&zstar);
        let mut s = CheckSuite::new();
        s.add(check_inexact_fpr_bound(&trace, &table, d0sq, tol())?);
        s.add(check_fpr_tail(&trace, tol()));
        suites.push(s);
        if seed == 0 {
            out.rows = km_rows(&trace, &table, d0sq);
        }
    }
    out.suite = merge_by_name(suites);
    Ok(out)
}

fn optimal_fpr() -> Result<Outcome> {
    let mut out = Outcome::new("optimal-fpr");
    let s = optimal_fpr_setup(OPT_ALPHA, OPT_BLOCKS)?;
    let (f, g) = s.space.indicator_pair();
    let trace = PrsRunner::new(&f, &g, 1.0).reference(Vector::zeros(s.z0.dim())).scalars_only().no_objective().no_ergodic().run(&s.z0, OPT_ITERS)?;
    let p = 2.0 * OPT_ALPHA;
    let mut scaled = BoundReport::lower("fpr_scaled_lower", Tolerance::abs(0.0));
    let mut cert = BoundReport::lower("truncation_certificate", Tolerance::abs(0.0));
    let mut oracle = BoundReport::upper("engine_vs_oracle", Tolerance::abs(0.0));
    let mut rows = Vec::new();
    for r in &trace.records {
        let drs = r.fpr / 4.0;
        let kp = (r.k + 1) as f64;
        oracle.push(r.k, 1e-9, rel_diff(drs, s.fpr_oracle(r.k)));
        if r.k >= 1 {
            scaled.push(r.k, 0.99, drs * kp.powf(p));
            cert.push(r.k, 0.99, s.truncated_lower_bound(r.k) * kp.powf(p));
        }
        rows.push(TraceRow { fpr: Some(drs), dist_sq: r.dist_sq, bound_fpr: Some(s.fpr_lower_bound(r.k)), ..TraceRow::new(r.k) });
    }
    for r in [scaled, cert, oracle] {
        out.add(r);
    }
    out.rows = rows;
    Ok(out)
}

fn arbitrarily_slow() -> Result<Outcome> {
    let mut out = Outcome::new("arbitrarily-slow");
    let h = slow_rate(0.05);
    let iters = 200;
    let s = arbitrarily_slow_setup(&h, 50, iters)?;
    let (f, g) = s.space.indicator_pair();
    let trace = PrsRunner::new(&f, &g, 1.0).reference(Vector::zeros(s.z0.dim())).scalars_only().no_objective().no_ergodic().run(&s.z0, iters)?;
    let mut norm = BoundReport::lower("distance_lower", Tolerance::abs(0.0));
    let mut wit = BoundReport::lower("witness_block", Tolerance::abs(0.0));
    let mut oracle = BoundReport::upper("engine_vs_oracle", Tolerance::abs(0.0));
    for r in &trace.records {
        let d2 = r.dist_sq.expect("reference set");
        norm.push(r.k, s.norm_lower_bound(r.k), d2.sqrt());
        oracle.push(r.k, 1e-10, rel_diff(d2, s.space.norm_sq_after(&s.z0, r.k)));
        let (a, b) = s.witness_pair(&h, r.k);
        wit.push(r.k, b, a);
    }
    for r in [norm, wit, oracle] {
        out.add(r);
    }
    out.rows = trace.records.iter().map(|r| TraceRow { fpr: Some(r.fpr / 4.0), dist_sq: r.dist_sq, ..TraceRow::new(r.k) }).collect();
    Ok(out)
}

fn fbs_rates() -> Result<Outcome> {
    let mut out = Outcome::new("fbs-rates");
    let (m, b) = random_lasso_data(20, 10, 7)?;
    let f = ProxFunction::l1(0.1)?;
    let g = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?);
    let beta = g.beta().expect("quadratic is smooth");
    let z0 = Z0Spec::Random { seed: 7, scale: 5.0 }.materialize(10)?;
    for (label, gamma) in [("gamma_beta", beta), ("gamma_1.5beta", 1.5 * beta)] {
        let fc = FbsConfig::new(gamma, beta)?;
        let c = crate::splitting::fbs_reference(&f, &g, beta, &z0, runner::REFERENCE_BUDGET)?;
        let d0 = z0.dist(&c.xstar);
        let trace = crate::splitting::run_fbs(&f, &g, gamma, &z0, RATE_ITERS, &TraceOptions::with_reference(c.xstar.clone()).scalars_only())?;
        out.suite.extend(prefixed(label, fbs_checks(&trace, &fc, c.obj_star, d0, tol())?));
        out.metric(&format!("{label}/alpha"), fc.alpha());
        if label == "gamma_beta" {
            out.rows = fbs_rows(&trace, &fc, c.obj_star, d0);
        }
    }
    out.metric("beta", beta);
    Ok(out)
}

fn ppa_rates() -> Result<Outcome> {
    let mut cfg = ExperimentConfig::new("least_squares", Algorithm::Ppa);
    cfg.iters = RATE_ITERS;
    cfg.z0 = Some(Z0Spec::Random { seed: 5, scale: 5.0 });
    Ok(run_experiment(&cfg))
}

fn ppa_lower() -> Result<Outcome> {
    let mut out = Outcome::new("ppa-lower");
    let s = ppa_diag_setup(1.0, 1.0, OPT_BLOCKS, OPT_ITERS)?;
    let trace = run_ppa(&s.f, 1.0, &s.z0, OPT_ITERS + 1, &TraceOptions::default().scalars_only())?;
    let mut fpr = BoundReport::lower("ppa_fpr_lower", Tolerance::abs(0.0));
    let mut obj = BoundReport::lower("ppa_objective_lower", Tolerance::abs(0.0));
    let mut oracle = BoundReport::upper("engine_vs_oracle", Tolerance::abs(0.0));
    let mut rows = Vec::new();
    for k in 0..=OPT_ITERS {
        let (r, next) = (&trace.records[k], &trace.records[k + 1]);
        let o = next.objective.expect("quadratic evaluates");
        fpr.push(k, 0.99 * s.fpr_lower(k), r.fpr);
        obj.push(k, 0.99 * s.objective_lower(k), o);
        oracle.push(k, 1e-9, rel_diff(r.fpr, s.fpr_oracle(k)).max(rel_diff(o, s.objective_oracle(k + 1))));
        rows.push(TraceRow { fpr: Some(r.fpr), obj_err: r.objective, bound_fpr: Some(s.fpr_lower(k)), ..TraceRow::new(k) });
    }
    for r in [fpr, obj, oracle] {
        out.add(r);
    }
    out.rows = rows;
    Ok(out)
}

const DRS_1D_STARTS: [f64; 7] = [-7.5, -2.3, -0.4, 0.3, 1.7, 4.2, 9.9];

fn drs_1d() -> Result<Outcome> {
    let mut out = Outcome::new("drs-1d");
    let mut suites = Vec::new();
    for (i, z0) in DRS_1D_STARTS.iter().enumerate() {
        let mut cfg = ExperimentConfig::new("one_d_drs", Algorithm::Drs);
        cfg.iters = RATE_ITERS;
        cfg.z0 = Some(Z0Spec::Explicit(vec![*z0]));
        let o = run_experiment(&cfg);
        if let Some(e) = o.error {
            return Err(Error::InvalidArgument(format!("drs-1d run from z0 = {z0} failed: {e}")));
        }
        if i == 0 {
            out.rows = o.rows;
        }
        suites.push(o.suite);
    }
    out.suite = merge_by_name(suites);
    Ok(out)
}

fn abs_trace(ex: &AbsExample, iters: usize) -> Result<(IterationTrace, SolutionCertificate)> {
    let (f, g) = ex.functions();
    let z0 = Vector::scalar(ex.z0());
    let trace = PrsRunner::new(&f, &g, 1.0).schedule(RelaxationSchedule::Constant(1.0)).reference(Vector::scalar(0.0)).run(&z0, iters)?;
    let cert = SolutionCertificate::from_fixed_point(&f, &g, 1.0, Vector::scalar(0.0), &z0)?;
    Ok((trace, cert))
}

const ABS_ITERS: usize = 1000;

fn oracle_gap(trace: &IterationTrace, k: usize, o: &crate::counterexamples::ScalarIterate) -> f64 {
    let r = &trace.records[k];
    let tri = r.triangle.as_ref().expect("triangle recorded");
    let pick = |v: &Option<Vector>| v.as_ref().expect("averages recorded")[0];
    [
        r.z.as_ref().expect("iterates recorded")[0] - o.z,
        tri.x_g[0] - o.x_g,
        tri.x_f[0] - o.x_f,
        pick(&r.xbar_g) - o.xbar_g,
        pick(&r.xbar_f) - o.xbar_f,
    ]
    .iter()
    .fold(0.0f64, |m, d| m.max(d.abs()))
}

fn abs_ergodic() -> Result<Outcome> {
    let mut out = Outcome::new("abs-ergodic");
    for (eps, floor) in [(0.1, 0.9), (0.01, 0.99)] {
        let ex = AbsExample::new(eps)?;
        let (trace, _) = abs_trace(&ex, ABS_ITERS)?;
        let p = format!("eps_{eps}");
        let slack = 1.0 + 2.0 * eps / (1.0 - eps);
        let closed = 4.0 * (1.0 - eps) / (2.0 - eps).powi(2);
        let mut oracle = BoundReport::upper(format!("{p}/engine_vs_oracle"), Tolerance::abs(0.0));
        let mut value = BoundReport::upper(format!("{p}/ergodic_objective_closed_form"), Tolerance::abs(0.0));
        let mut upper = BoundReport::upper(format!("{p}/ergodic_objective_upper"), tol());
        let mut ratio = BoundReport::lower(format!("{p}/ergodic_ratio"), Tolerance::abs(0.0));
        let mut ratio_cf = BoundReport::upper(format!("{p}/ergodic_ratio_closed_form"), Tolerance::abs(0.0));
        let mut feas_even = BoundReport::upper(format!("{p}/feasibility_factor_even"), tol());
        let mut feas_all = BoundReport::upper(format!("{p}/feasibility_factor"), tol());
        let mut rows = Vec::new();
        for r in &trace.records {
            let k = r.k;
            let kp = (k + 1) as f64;
            oracle.push(k, ORACLE_TOL, oracle_gap(&trace, k, &ex.oracle(k)));
            let erg = r.ergodic_objective.expect("ergodic objective");
            value.push(k, ORACLE_TOL, (erg - (1.0 - eps) / kp).abs() * kp);
            upper.push(k, ex.ergodic_upper(k), erg);
            ratio.push(k, floor, erg / ex.ergodic_upper(k));
            ratio_cf.push(k, 1e-6, (erg / ex.ergodic_upper(k) - closed).abs());
            let gap = r.ergodic_feas_gap.expect("ergodic gap");
            let factor = ex.feasibility_upper(k) / gap;
            if k % 2 == 0 {
                feas_even.push(k, 4.0, factor);
            }
            feas_all.push(k, 4.0 * slack, factor);
            rows.push(TraceRow {
                fpr: Some(r.fpr),
                dist_sq: r.dist_sq,
                obj_err: r.objective,
                obj_err_ergodic: Some(erg),
                feas_gap: r.feas_gap,
                bound_obj_hi: Some(ex.ergodic_upper(k)),
                bound_feas: Some(ex.feasibility_upper(k)),
                ..TraceRow::new(k)
            });
        }
        for r in [oracle, value, upper, ratio, ratio_cf, feas_even, feas_all] {
            out.add(r);
        }
        out.metric(&format!("{p}/ratio_closed_form"), closed);
        if eps == 0.1 {
            out.rows = rows;
        }
    }
    Ok(out)
}

fn lipschitz_cors() -> Result<Outcome> {
    let mut out = Outcome::new("lipschitz-cors");
    for eps in [0.1, 0.01] {
        let ex = AbsExample::new(eps)?;
        let (trace, cert) = abs_trace(&ex, ABS_ITERS)?;
        let table = RelaxationSchedule::Constant(1.0).tabulate(ABS_ITERS)?;
        let p = format!("eps_{eps}");
        let slack = 1.0 + 2.0 * eps / (1.0 - eps);
        let mut bound = BoundReport::upper(format!("{p}/lipschitz_ergodic_upper"), tol());
        let mut lower = BoundReport::lower(format!("{p}/lipschitz_ergodic_lower"), tol());
        let mut agree = BoundReport::upper(format!("{p}/bound_closed_form"), Tolerance::abs(0.0));
        let mut even = BoundReport::upper(format!("{p}/factor_even"), tol());
        let mut all = BoundReport::upper(format!("{p}/factor"), tol());
        for r in &trace.records {
            let k = r.k;
            let xg = r.xbar_g.as_ref().expect("averages")[0];
            let measured = xg.abs();
            let (lo, hi) = lipschitz_objective_bounds(&cert, &table, k, 1.0, Averaging::Ergodic);
            bound.push(k, hi, measured);
            lower.push(k, lo, measured);
            agree.push(k, 1e-12, rel_diff(hi, ex.lipschitz_upper(k)));
            let factor = hi / measured;
            if k % 2 == 0 {
                even.push(k, 2.5, factor);
            }
            all.push(k, 2.5 * slack, factor);
        }
        for r in [bound, lower, agree, even, all] {
            out.add(r);
        }
    }
    Ok(out)
}

fn square_feasibility() -> Result<Outcome> {
    let mut out = Outcome::new("square-feasibility");
    let ex = SquareExample;
    let (f, g) = ex.functions();
    let iters = ABS_ITERS;
    let sched = RelaxationSchedule::Constant(1.0);
    let table = sched.tabulate(iters)?;
    let trace = PrsRunner::new(&f, &g, 1.0).schedule(sched.clone()).reference(Vector::zeros(2)).no_objective().run(&ex.z0(), iters)?;
    let d0 = ex.dist0();
    let mut oracle = BoundReport::upper("engine_vs_oracle", Tolerance::abs(0.0));
    let mut unit = BoundReport::upper("scaled_gap_even", Tolerance::abs(0.0));
    let mut bound = BoundReport::upper("ergodic_feasibility", tol());
    let mut f_hi = BoundReport::upper("gap_factor_at_most_two", tol());
    let mut f_lo = BoundReport::lower("gap_factor_at_least_one", tol());
    let mut rows = Vec::new();
    for r in &trace.records {
        let k = r.k;
        let o = ex.oracle(k);
        let tri = r.triangle.as_ref().expect("triangle");
        let diff = [
            r.z.as_ref().expect("iterates").max_abs_diff(&o.z),
            tri.x_g.max_abs_diff(&o.x_g),
            tri.x_f.max_abs_diff(&o.x_f),
            r.xbar_g.as_ref().expect("averages").max_abs_diff(&o.xbar_g),
            r.xbar_f.as_ref().expect("averages").max_abs_diff(&o.xbar_f),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        oracle.push(k, ORACLE_TOL, diff);
        let gap = r.ergodic_feas_gap.expect("ergodic gap");
        let b = feasibility_gap_bound(d0, &table, k, Averaging::Ergodic);
        bound.push(k, b, gap);
        if k % 2 == 0 {
            unit.push(k, ORACLE_TOL, (gap * (k + 1) as f64 / d0 - 1.0).abs());
            f_hi.push(k, 2.0, b / gap);
            f_lo.push(k, 1.0, b / gap);
        }
        rows.push(TraceRow { fpr: Some(r.fpr), feas_gap: Some(gap), bound_feas: Some(b), ..TraceRow::new(k) });
    }
    for r in [oracle, unit, bound, f_hi, f_lo] {
        out.add(r);
    }
    // Same iteration through the set-pair driver.
    let pair = ConvexSetPair::new(ConvexSet::Subspace(Subspace::coordinate(2, &[1])?), ConvexSet::Subspace(Subspace::coordinate(2, &[0])?))?;
    let ft = run_feasibility(&pair, 1.0, &sched, &ex.z0(), iters)?;
    // Nonergodic bounds are infinite at lambda = 1, so only the ergodic one is kept.
    let ergodic = check_feasibility(&ft, d0, &table, tol()).reports.into_iter().filter(|r| r.name == "ergodic_feasibility");
    ergodic.for_each(|r| out.add(prefixed_report("set_pair", r)));
    out.metric("gap_factor", feasibility_gap_bound(d0, &table, 0, Averaging::Ergodic) / trace.records[0].ergodic_feas_gap.unwrap_or(f64::NAN));
    out.rows = rows;
    Ok(out)
}

const ERGODIC_PROBLEMS: u64 = 100;
const ERGODIC_ITERS: usize = 500;

fn random_quadratic_l1(seed: u64) -> Result<(ProxFunction, ProxFunction, f64, RelaxationSchedule, Vector)> {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = r.transpose() * &r + nalgebra::DMatrix::identity(n, n) * 0.1;
    let lin = Vector((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    let center = Vector((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let rho = rng.gen_range(0.1..2.0);
    let gamma = rng.gen_range(0.3..3.0);
    let lambdas = (0..=ERGODIC_ITERS).map(|_| 1.0 - rng.gen_range(0.0..1.0)).collect();
    let z0 = Vector((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect());
    let f = ProxFunction::quadratic(q, lin, 0.0)?;
    let g = ProxFunction::l1_centered(rho, center)?;
    Ok((f, g, gamma, RelaxationSchedule::Explicit(lambdas), z0))
}

fn ergodic_prs() -> Result<Outcome> {
    let mut out = Outcome::new("ergodic-prs");
    let mut suites = Vec::new();
    let mut worst_residual = 0.0f64;
    for seed in 0..ERGODIC_PROBLEMS {
        let (f, g, gamma, sched, z0) = random_quadratic_l1(seed)?;
        let cert = fixed_point_reference(&f, &g, gamma, &z0, runner::REFERENCE_BUDGET)?;
        worst_residual = worst_residual.max(cert.residual);
        let trace = PrsRunner::new(&f, &g, gamma).schedule(sched.clone()).reference(cert.zstar.clone()).run(&z0, ERGODIC_ITERS)?;
        let table = sched.tabulate(ERGODIC_ITERS)?;
        let mut s = check_fundamental_inequalities(&trace, &cert, tol())?;
        s.extend(check_ergodic_bands(&trace, &cert, &table, tol())?);
        suites.push(s);
        if seed == 0 {
            out.rows = prs_rows(&trace, &cert, &table);
        }
    }
    out.suite = merge_by_name(suites);
    out.metric("worst_reference_residual", worst_residual);
    Ok(out)
}

const DV_BLOCKS_BAND: usize = 10_000;

fn nonergodic_prs() -> Result<Outcome> {
    let mut out = Outcome::new("nonergodic-prs");
    let s = distance_lower_setup(OPT_ALPHA, DV_BLOCKS_BAND)?;
    let (f, g) = s.space.distance_pair();
    let zstar = Vector::zeros(s.z0.dim());
    let cert = SolutionCertificate::from_fixed_point(&f, &g, s.gamma, zstar.clone(), &s.z0)?;
    let trace = PrsRunner::new(&f, &g, s.gamma).reference(zstar).scalars_only().no_ergodic().run(&s.z0, RATE_ITERS)?;
    let table = RelaxationSchedule::Constant(0.5).tabulate(RATE_ITERS)?;
    out.suite = check_nonergodic_bands(&trace, &cert, &table, tol())?;
    out.rows = prs_rows(&trace, &cert, &table);
    out.metric("gamma", s.gamma);
    Ok(out)
}

fn dv_lower() -> Result<Outcome> {
    let mut out = Outcome::new("dv-lower");
    let s = distance_lower_setup(OPT_ALPHA, OPT_BLOCKS)?;
    let (f, g) = s.space.distance_pair();
    let v = s.space.v_subspace();
    let mut dv = Vec::with_capacity(OPT_ITERS + 1);
    PrsRunner::new(&f, &g, s.gamma)
        .scalars_only()
        .no_ergodic()
        .no_objective()
        .observe(|_, _, tri| dv.push(v.distance(&tri.x_g)))
        .run(&s.z0, OPT_ITERS)?;
    let mut oracle = BoundReport::upper("engine_vs_oracle", Tolerance::abs(0.0));
    for (k, d) in dv.iter().enumerate() {
        oracle.push(k, 1e-9, (d * d - s.distance_sq_oracle(k)).abs() / s.distance_sq_oracle(0));
    }
    let fit = fit_decay_exponent(&dv, 10, OPT_ITERS)?;
    let mut exp = BoundReport::lower("decay_exponent", Tolerance::abs(0.0));
    exp.push(OPT_ITERS, -0.85, fit.exponent);
    out.add(exp);
    out.add(oracle);
    out.metric("exponent", fit.exponent);
    out.rows = dv.iter().enumerate().map(|(k, d)| TraceRow { feas_gap: Some(*d), ..TraceRow::new(k) }).collect();
    Ok(out)
}

const EQUIV_BLOCKS: usize = 1000;
const EQUIV_ITERS: usize = 500;

fn max_trace_gap(a: &IterationTrace, b: &IterationTrace) -> f64 {
    a.records
        .iter()
        .zip(&b.records)
        .map(|(x, y)| x.z.as_ref().expect("iterates").max_abs_diff(y.z.as_ref().expect("iterates")))
        .fold(0.0, f64::max)
}

fn distance_indicator_equivalence() -> Result<Outcome> {
    let mut out = Outcome::new("distance-indicator-equivalence");
    let s = distance_lower_setup(OPT_ALPHA, EQUIV_BLOCKS)?;
    let (fi, gi) = s.space.indicator_pair();
    let (fd, gd) = s.space.distance_pair();
    let run = |f: &ProxFunction, g: &ProxFunction, gamma: f64| PrsRunner::new(f, g, gamma).no_objective().no_ergodic().run(&s.z0, EQUIV_ITERS);
    let gap = max_trace_gap(&run(&fi, &gi, s.gamma)?, &run(&fd, &gd, s.gamma)?);
    let mut r = BoundReport::upper("trace_gap", Tolerance::abs(0.0));
    r.push(EQUIV_ITERS, 1e-10, gap);
    out.add(r);
    out.metric("trace_gap", gap);
    let small = 0.5 * s.gamma;
    out.metric("trace_gap_half_gamma", max_trace_gap(&run(&fi, &gi, small)?, &run(&fd, &gd, small)?));
    Ok(out)
}

fn scalar_lasso() -> Result<LinearlyConstrainedProblem> {
    let m = LinearMap::from_rows(&[vec![1.5]])?;
    let f = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &Vector::scalar(2.0))?);
    LinearlyConstrainedProblem::new(f, ProxFunction::l1(0.7)?, LinearMap::identity(1), LinearMap::scaled(-1.0, 1), Vector::zeros(1))
}

fn admm_equivalence() -> Result<Outcome> {
    let mut out = Outcome::new("admm-equivalence");
    let p = scalar_lasso()?;
    let (df, dg) = dual_functions(&p);
    let iters = 1000;
    let z0 = Vector::scalar(-0.8);
    let gamma = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let varying = RelaxationSchedule::Explicit((0..=iters).map(|_| rng.gen_range(0.1..=1.0)).collect());
    for (label, sched) in [("constant", RelaxationSchedule::Constant(0.5)), ("varying", varying)] {
        let admm = run_relaxed_admm(&p, gamma, &sched, &z0, iters)?;
        let prs = run_relaxed_prs(&df, &dg, gamma, &sched, &z0, iters)?;
        let mut r = BoundReport::upper(format!("{label}/dual_prs_trace"), Tolerance::abs(0.0));
        for (a, b) in admm.records.iter().zip(&prs.records) {
            let bz = b.z.as_ref().expect("iterates");
            r.push(a.k, ORACLE_TOL, a.z.max_abs_diff(bz) / bz.norm().max(1.0));
        }
        out.add(r);
        out.add(prefixed_report(label, check_step_identity(&admm, Tolerance::abs(1e-13))));
        if label == "constant" {
            out.rows = admm.records.iter().map(|r| TraceRow { feas_gap: Some(r.residual.norm()), obj_err: r.objective, ..TraceRow::new(r.k) }).collect();
        }
    }
    Ok(out)
}

fn prefixed_report(prefix: &str, mut r: BoundReport) -> BoundReport {
    r.name = format!("{prefix}/{}", r.name);
    r
}

fn lasso_admm_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new("lasso", Algorithm::Admm).with_param("rows", 8).with_param("cols", 4).with_param("seed", 3);
    cfg.iters = RATE_ITERS;
    cfg.z0 = Some(Z0Spec::Random { seed: 3, scale: 2.0 });
    cfg
}

fn lasso_admm_problem(cfg: &ExperimentConfig) -> Result<(LinearlyConstrainedProblem, Vector)> {
    let built = super::problems::build(cfg)?;
    match built.kind {
        super::problems::Kind::Constrained(p) => {
            let z0 = cfg.z0.as_ref().expect("pinned start").materialize(p.constraint_dim())?;
            Ok((p, z0))
        }
        _ => Err(Error::InvalidConfig("lasso with admm builds a constrained problem".into())),
    }
}

fn lasso_admm(name: &str, prefixes: &[&str]) -> Outcome {
    let mut cfg = lasso_admm_config();
    cfg.checks = prefixes.iter().map(|s| s.to_string()).collect();
    let mut out = run_experiment(&cfg);
    out.name = name.to_string();
    out
}

fn admm_dual_feas() -> Result<Outcome> {
    let mut out = lasso_admm("admm-dual-feas", &["admm_nonergodic_feasibility", "admm_ergodic_feasibility"]);
    // The displayed ergodic constant is reported, not asserted.
    let cfg = lasso_admm_config();
    let (p, z0) = lasso_admm_problem(&cfg)?;
    let cert = admm_reference(&p, cfg.gamma, &z0, runner::REFERENCE_BUDGET)?;
    let table = cfg.schedule.tabulate(cfg.iters)?;
    let b = crate::admm::admm_feasibility_bounds(&cert, &table, cfg.iters, Averaging::Ergodic);
    out.metric("ergodic_feasibility_stated", b.stated);
    out.metric("ergodic_feasibility_derived", b.derived);
    Ok(out)
}

fn admm_primal() -> Result<Outcome> {
    let mut out = lasso_admm(
        "admm-primal",
        &["admm_nonergodic_objective", "admm_ergodic_objective", "admm_fundamental", "admm_conversion_identity", "admm_dual_primal", "admm_step_identity"],
    );
    let cfg = lasso_admm_config();
    let (p, z0) = lasso_admm_problem(&cfg)?;
    let trace = run_relaxed_admm(&p, cfg.gamma, &cfg.schedule, &z0, 2000)?;
    out.suite.extend(check_subgradient_inclusions(&p, &trace, 8, 50, 17, tol())?);
    Ok(out)
}

fn distributed_admm() -> Result<Outcome> {
    let mut out = Outcome::new("distributed-admm");
    let a = [1.0, 2.0, 0.5, 3.0, 1.5];
    let c = [-2.0, 1.0, 4.0, 0.5, -1.0];
    let locals = a.iter().zip(&c).map(|(a, c)| centered_square(*a, *c)).collect::<Result<Vec<_>>>()?;
    let p = DistributedProblem::new(Graph::path(5), locals, 1)?;
    let rounds = 2000;
    dadmm_checks(&p, 1.0, rounds, &mut out)?;
    let target = a.iter().zip(&c).map(|(a, c)| a * c).sum::<f64>() / a.iter().sum::<f64>();
    let trace = crate::admm::run_distributed_admm(&p, 1.0, rounds)?;
    let mut r = BoundReport::upper("consensus_value", Tolerance::abs(0.0));
    for (i, x) in trace.x.last().expect("rounds").iter().enumerate() {
        r.push(i, 1e-6, (x[0] - target).abs());
    }
    out.add(r);
    out.metric("closed_form_minimizer", target);
    Ok(out)
}

const LEMMA_SEQUENCES: u64 = 200;
const LEMMA_LEN: usize = 1000;

fn lemma_instance(part: LemmaPart, seed: u64) -> SequenceCheck {
    let n = LEMMA_LEN + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen_range(0.0..1.0)).collect();
    let summable = |rng: &mut ChaCha8Rng, k: usize| rng.gen_range(0.0..1.0) * ((k + 1) as f64).powf(-rng.gen_range(1.1..3.0));
    match part {
        LemmaPart::Monotone => {
            let mut a = vec![rng.gen_range(0.1..10.0)];
            for _ in 1..n {
                let last = *a.last().unwrap();
                a.push(last * rng.gen_range(0.9..1.0));
            }
            SequenceCheck::new(part, a, lambda)
        }
        LemmaPart::UpToErrors => {
            let e: Vec<f64> = (0..n).map(|k| summable(&mut rng, k)).collect();
            let mut a = vec![rng.gen_range(0.1..10.0)];
            for k in 0..n - 1 {
                a.push(rng.gen_range(0.0..1.0) * (a[k] + e[k]));
            }
            SequenceCheck::new(part, a, lambda).with_errors(e)
        }
        LemmaPart::Telescoping => {
            let e: Vec<f64> = (0..n).map(|k| summable(&mut rng, k)).collect();
            let d: Vec<f64> = (0..n).map(|k| summable(&mut rng, k)).collect();
            let mut b = vec![rng.gen_range(0.0..1.0); n + 1];
            for k in (0..n).rev() {
                b[k] = b[k + 1] + d[k];
            }
            let a = (0..n).map(|k| 0.999 * rng.gen_range(0.0..1.0) * (b[k] - b[k + 1] + e[k]) / lambda[k]).collect();
            SequenceCheck::new(part, a, lambda).with_b(b).with_errors(e)
        }
        LemmaPart::RunningMin => {
            let a = (0..n).map(|k| rng.gen_range(0.0..10.0) / (k + 1) as f64).collect();
            SequenceCheck::new(part, a, lambda)
        }
    }
}

fn summable_lemma() -> Result<Outcome> {
    let mut out = Outcome::new("summable-lemma");
    let mut suites = Vec::new();
    for (i, part) in [LemmaPart::Monotone, LemmaPart::UpToErrors, LemmaPart::Telescoping, LemmaPart::RunningMin].into_iter().enumerate() {
        for s in 0..LEMMA_SEQUENCES {
            let mut suite = CheckSuite::new();
            suite.add(verify_summable_lemma(&lemma_instance(part, 10_000 * i as u64 + s), tol())?);
            suites.push(suite);
        }
    }
    out.suite = merge_by_name(suites);
    out.metric("sequences_per_part", LEMMA_SEQUENCES as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique_and_criteria_covered() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
        for c in 1..=16u8 {
            assert!(REGISTRY.iter().any(|e| e.criterion == c), "criterion {c}");
        }
    }

    #[test]
    fn unknown_name_lists_registry() {
        let e = reproduce("unknown").unwrap_err().to_string();
        assert!(e.contains("km-fpr") && e.contains("summable-lemma"), "{e}");
    }

    #[test]
    fn fast_entries_pass() {
        for e in REGISTRY.iter().filter(|e| e.runtime == Runtime::Fast) {
            let o = e.execute();
            assert!(o.passed(), "{}: {:?} {:?}", e.name, o.error, o.suite.failures());
        }
    }
}
