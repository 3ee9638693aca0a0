//! Turn a config into an outcome, and an outcome into files.

use std::path::{Path, PathBuf};

use super::artifacts::{write_artifacts, Outcome, TraceRow};
use super::config::{Algorithm, ExperimentConfig};
use super::problems::{self, Kind};
use crate::admm::{
    admm_feasibility_bounds, admm_primal_bounds, admm_reference, check_admm_bounds, check_admm_fundamental, check_step_identity, edge_formulation,
    run_distributed_admm, run_relaxed_admm, AdmmTrace, DistributedProblem, DualCertificate, LinearlyConstrainedProblem,
};
use crate::error::{Error, Result};
use crate::feasibility::{check_feasibility, feasibility_gap_bound, run_feasibility, ConvexSetPair};
use crate::km::{check_fejer, check_fpr_bound, check_fpr_monotone, check_fpr_summability, fpr_bound, IterationTrace, RelaxationSchedule, ScheduleTable, TraceOptions};
use crate::linalg::Vector;
use crate::prox::ProxFunction;
use crate::rates::{check_ergodic_bands, check_fundamental_inequalities, check_nonergodic_bands, fbs_bounds, nonergodic_objective_bounds, Averaging};
use crate::report::{BoundReport, CheckSuite, Tolerance};
use crate::splitting::{fbs_reference, fixed_point_reference, run_fbs, ErgodicAverage, FbsConfig, PrsRunner, SolutionCertificate};

/// Environment variable naming the artifact root.
pub const OUTPUT_ENV: &str = "OPSPLIT_OUT";
/// Artifact root when the variable is unset.
pub const DEFAULT_OUTPUT: &str = "opsplit-out";
/// Iteration budget for reference solutions.
pub const REFERENCE_BUDGET: usize = 1_000_000;
/// Iterates are kept in memory only while `dim * (iters + 1)` stays below this.
pub const VECTOR_BUDGET: usize = 4_000_000;

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

pub fn artifact_dir(cfg: &ExperimentConfig) -> PathBuf {
    match &cfg.output {
        Some(p) => PathBuf::from(p),
        None => output_root().join(cfg.label()),
    }
}

/// Run a validated config. Failures of the run itself are recorded in the outcome.
pub fn run_experiment(cfg: &ExperimentConfig) -> Outcome {
    let mut out = Outcome::new(cfg.label());
    out.config = serde_json::to_value(cfg).ok();
    if let Err(e) = cfg.validate().and_then(|_| execute(cfg, &mut out)) {
        out.error = Some(e.to_string());
    }
    out.filter_checks(&cfg.checks);
    out
}

/// Run and write artifacts to `artifact_dir(cfg)`.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<(Outcome, PathBuf)> {
    let out = run_experiment(cfg);
    let dir = artifact_dir(cfg);
    write_artifacts(&out, &dir)?;
    Ok((out, dir))
}

fn execute(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let built = problems::build(cfg)?;
    out.seed = built.seed;
    let z0 = match (&cfg.z0, &built.default_z0) {
        (Some(spec), _) => spec.materialize(built.dim)?,
        (None, Some(z)) => z.clone(),
        (None, None) => Vector::zeros(built.dim),
    };
    let known = built.known_solution.as_ref();
    match (&built.kind, cfg.algorithm) {
        (Kind::Split { f, g }, Algorithm::Prs | Algorithm::Drs) => run_split(cfg, f, g, &z0, known, out),
        (Kind::Sets(pair), Algorithm::Feasibility) => run_sets(cfg, pair, &z0, known, out),
        (Kind::Smooth { f, g }, Algorithm::Fbs | Algorithm::Ppa) => run_smooth(cfg, f, g, &z0, known, out),
        (Kind::Constrained(p), Algorithm::Admm) => run_admm(cfg, p, &z0, out),
        (Kind::Network(p), Algorithm::Dadmm) => run_dadmm(cfg, p, out),
        _ => Err(Error::InvalidConfig(format!("{} cannot run {}", cfg.problem, cfg.algorithm.name()))),
    }
}

fn certificate(f: &ProxFunction, g: &ProxFunction, gamma: f64, z0: &Vector, known: Option<&Vector>) -> Result<SolutionCertificate> {
    match known {
        Some(z) => SolutionCertificate::from_fixed_point(f, g, gamma, z.clone(), z0),
        None => fixed_point_reference(f, g, gamma, z0, REFERENCE_BUDGET),
    }
}

/// KM checks on any trace whose `fpr` is that of a nonexpansive base operator.
pub fn km_checks(trace: &IterationTrace, table: &ScheduleTable, dist0_sq: f64, tol: Tolerance) -> Result<CheckSuite> {
    let mut s = CheckSuite::new();
    s.add(check_fpr_bound(trace, table, dist0_sq, tol));
    if trace.records.iter().all(|r| r.dist_sq.is_some()) {
        s.add(check_fejer(trace, tol)?);
    }
    // Monotone FPR is only guaranteed for a constant relaxation.
    if table.lambda.windows(2).all(|w| w[0] == w[1]) {
        s.add(check_fpr_monotone(trace, tol));
    }
    s.add(check_fpr_summability(trace, table, dist0_sq, tol));
    Ok(s)
}

/// `||T_{1/2} z^{k+1} - z^{k+1}||^2 <= |z0 - z*|^2 / (2 (k+1)^2)` for scalar DRS,
/// where the recorded `fpr` is that of `T_PRS`, four times the averaged one.
pub fn one_d_drs_check(trace: &IterationTrace, dist0: f64, tol: Tolerance) -> BoundReport {
    let mut r = BoundReport::upper("drs_1d_fpr", tol);
    for w in trace.records.windows(2) {
        let k = w[0].k as f64;
        r.push(w[1].k, dist0 * dist0 / (2.0 * (k + 1.0) * (k + 1.0)), w[1].fpr / 4.0);
    }
    r
}

/// Schema rows for a PRS trace against a certificate.
pub fn prs_rows(trace: &IterationTrace, cert: &SolutionCertificate, table: &ScheduleTable) -> Vec<TraceRow> {
    let d0sq = cert.dist0 * cert.dist0;
    trace
        .records
        .iter()
        .map(|r| {
            let (lo, hi) = nonergodic_objective_bounds(cert, table.tau_floor[r.k], r.k);
            TraceRow {
                fpr: Some(r.fpr),
                dist_sq: r.dist_sq,
                obj_err: r.objective.map(|o| o - cert.obj_star),
                obj_err_ergodic: r.ergodic_objective.map(|o| o - cert.obj_star),
                feas_gap: r.feas_gap,
                bound_fpr: Some(fpr_bound(table, d0sq, r.k)),
                bound_obj_lo: r.objective.map(|_| lo),
                bound_obj_hi: r.objective.map(|_| hi),
                bound_feas: Some(feasibility_gap_bound(cert.dist0, table, r.k, Averaging::Nonergodic)),
                ..TraceRow::new(r.k)
            }
        })
        .collect()
}

fn is_half(s: &RelaxationSchedule, iters: usize) -> bool {
    (0..=iters).all(|k| s.lambda(k) == 0.5)
}

fn run_split(cfg: &ExperimentConfig, f: &ProxFunction, g: &ProxFunction, z0: &Vector, known: Option<&Vector>, out: &mut Outcome) -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let cert = certificate(f, g, cfg.gamma, z0, known)?;
    let keep = z0.dim() * (cfg.iters + 1) <= VECTOR_BUDGET;
    let mut runner = PrsRunner::new(f, g, cfg.gamma).schedule(cfg.schedule.clone()).reference(cert.zstar.clone());
    if !keep {
        runner = runner.scalars_only();
    }
    let trace = runner.run(z0, cfg.iters)?;
    let table = cfg.schedule.tabulate(cfg.iters)?;
    out.suite.extend(km_checks(&trace, &table, cert.dist0 * cert.dist0, tol)?);
    let evaluable = trace.records.iter().all(|r| r.objective.is_some_and(f64::is_finite));
    if evaluable {
        if keep {
            out.suite.extend(check_fundamental_inequalities(&trace, &cert, tol)?);
        }
        out.suite.extend(check_ergodic_bands(&trace, &cert, &table, tol)?);
        out.suite.extend(check_nonergodic_bands(&trace, &cert, &table, tol)?);
    }
    if z0.dim() == 1 && is_half(&cfg.schedule, cfg.iters) {
        out.add(one_d_drs_check(&trace, cert.dist0, tol));
    }
    out.metric("dist0", cert.dist0);
    out.metric("obj_star", cert.obj_star);
    out.metric("reference_residual", cert.residual);
    out.rows = prs_rows(&trace, &cert, &table);
    Ok(())
}

fn run_sets(cfg: &ExperimentConfig, pair: &ConvexSetPair, z0: &Vector, known: Option<&Vector>, out: &mut Outcome) -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let (f, g) = pair.functions();
    let cert = certificate(&f, &g, cfg.gamma, z0, known)?;
    let ft = run_feasibility(pair, cfg.gamma, &cfg.schedule, z0, cfg.iters)?;
    let table = cfg.schedule.tabulate(cfg.iters)?;
    out.suite.extend(km_checks(&ft.trace, &table, cert.dist0 * cert.dist0, tol)?);
    out.suite.extend(check_feasibility(&ft, cert.dist0, &table, tol));
    out.metric("dist0", cert.dist0);
    out.rows = ft
        .trace
        .records
        .iter()
        .map(|r| TraceRow {
            fpr: Some(r.fpr),
            feas_gap: r.feas_gap,
            bound_fpr: Some(fpr_bound(&table, cert.dist0 * cert.dist0, r.k)),
            bound_feas: Some(feasibility_gap_bound(cert.dist0, &table, r.k, Averaging::Nonergodic)),
            ..TraceRow::new(r.k)
        })
        .collect();
    Ok(())
}

/// FBS/PPA rate checks: objective bound, FPR bound and monotone objective,
/// each comparing `z^{k+1}` against the bound indexed by `k`.
pub fn fbs_checks(trace: &IterationTrace, fc: &FbsConfig, obj_star: f64, dist0_xstar: f64, tol: Tolerance) -> Result<CheckSuite> {
    let mut obj = BoundReport::upper("fbs_objective", tol);
    let mut fpr = BoundReport::upper("fbs_fpr", tol);
    let mut mono = BoundReport::upper("fbs_objective_monotone", tol);
    for w in trace.records.windows(2) {
        let (o0, o1) = match (w[0].objective, w[1].objective) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidArgument("FBS checks need objective values".into())),
        };
        let (b_obj, b_fpr) = fbs_bounds(fc, dist0_xstar, w[0].k);
        obj.push(w[0].k, b_obj, o1 - obj_star);
        fpr.push(w[0].k, b_fpr, w[1].fpr);
        mono.push(w[1].k, o0, o1);
    }
    let mut s = CheckSuite::new();
    s.add(obj);
    s.add(fpr);
    s.add(mono);
    Ok(s)
}

pub fn fbs_rows(trace: &IterationTrace, fc: &FbsConfig, obj_star: f64, dist0_xstar: f64) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| {
            let b = (r.k > 0).then(|| fbs_bounds(fc, dist0_xstar, r.k - 1));
            TraceRow {
                fpr: Some(r.fpr),
                dist_sq: r.dist_sq,
                obj_err: r.objective.map(|o| o - obj_star),
                bound_fpr: b.map(|b| b.1),
                bound_obj_hi: b.map(|b| b.0),
                ..TraceRow::new(r.k)
            }
        })
        .collect()
}

fn run_smooth(cfg: &ExperimentConfig, f: &ProxFunction, g: &ProxFunction, z0: &Vector, known: Option<&Vector>, out: &mut Outcome) -> Result<()> {
    let beta = g.beta().ok_or_else(|| Error::Unsupported(format!("{} is not smooth", g.kind_name())))?;
    let fc = FbsConfig::new(cfg.gamma, beta)?;
    let (xstar, obj_star) = match known {
        Some(x) => (x.clone(), f.eval(x)? + g.eval(x)?),
        None => {
            let c = fbs_reference(f, g, cfg.gamma, z0, REFERENCE_BUDGET)?;
            (c.xstar, c.obj_star)
        }
    };
    let d0 = z0.dist(&xstar);
    let opts = TraceOptions::with_reference(xstar).scalars_only();
    let trace = run_fbs(f, g, cfg.gamma, z0, cfg.iters, &opts)?;
    out.suite.extend(fbs_checks(&trace, &fc, obj_star, d0, Tolerance::DEFAULT)?);
    out.metric("dist0_xstar", d0);
    out.metric("obj_star", obj_star);
    out.metric("alpha", fc.alpha());
    out.rows = fbs_rows(&trace, &fc, obj_star, d0);
    Ok(())
}

/// ADMM checks: feasibility and objective bands, per-step inequalities,
/// the conversion identity to `1e-8` and the step identity to `1e-13`.
pub fn admm_checks(p: &LinearlyConstrainedProblem, trace: &AdmmTrace, cert: &DualCertificate, table: &ScheduleTable) -> Result<CheckSuite> {
    let mut s = check_admm_bounds(p, trace, cert, table, Tolerance::DEFAULT)?;
    if trace.records.iter().all(|r| r.objective.is_some()) {
        s.extend(check_admm_fundamental(p, trace, cert, Tolerance::DEFAULT, Tolerance::abs(1e-8))?);
    }
    s.add(check_step_identity(trace, Tolerance::abs(1e-13)));
    Ok(s)
}

pub fn admm_rows(p: &LinearlyConstrainedProblem, trace: &AdmmTrace, cert: &DualCertificate, table: &ScheduleTable) -> Result<Vec<TraceRow>> {
    let g = trace.gamma;
    let (mut xa, mut ya) = (ErgodicAverage::default(), ErgodicAverage::default());
    let mut rows = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let xb = xa.push(r.lambda, &r.x).clone();
        let yb = ya.push(r.lambda, &r.y).clone();
        let (lo, hi) = admm_primal_bounds(cert, table, r.k, Averaging::Nonergodic);
        let rn = r.residual.norm();
        rows.push(TraceRow {
            fpr: Some(4.0 * g * g * rn * rn),
            dist_sq: Some(r.z.dist_sq(&cert.zstar)),
            obj_err: r.objective.map(|o| o - cert.obj_star),
            obj_err_ergodic: r.objective.map(|_| p.objective(&xb, &yb).map(|o| o - cert.obj_star)).transpose()?,
            feas_gap: Some(rn),
            bound_fpr: Some(fpr_bound(table, cert.dist0 * cert.dist0, r.k)),
            bound_obj_lo: r.objective.map(|_| lo),
            bound_obj_hi: r.objective.map(|_| hi),
            bound_feas: Some(admm_feasibility_bounds(cert, table, r.k, Averaging::Nonergodic).derived.sqrt()),
            ..TraceRow::new(r.k)
        });
    }
    Ok(rows)
}

fn run_admm(cfg: &ExperimentConfig, p: &LinearlyConstrainedProblem, z0: &Vector, out: &mut Outcome) -> Result<()> {
    let cert = admm_reference(p, cfg.gamma, z0, REFERENCE_BUDGET)?;
    let trace = run_relaxed_admm(p, cfg.gamma, &cfg.schedule, z0, cfg.iters)?;
    let table = cfg.schedule.tabulate(cfg.iters)?;
    out.suite.extend(admm_checks(p, &trace, &cert, &table)?);
    out.metric("dist0", cert.dist0);
    out.metric("wstar_norm", cert.wstar_norm());
    out.metric("obj_star", cert.obj_star);
    out.rows = admm_rows(p, &trace, &cert, &table)?;
    Ok(())
}

/// Distributed outcome pieces shared with the registry: objective band and
/// consensus residual bound (edge-formulation certificate at penalty `2 gamma`,
/// round `k + 1` against ADMM step `k`), and the edge-confinement count.
pub fn dadmm_checks(p: &DistributedProblem, gamma: f64, iters: usize, out: &mut Outcome) -> Result<()> {
    let tol = Tolerance::DEFAULT;
    let trace = run_distributed_admm(p, gamma, iters)?;
    let ep = edge_formulation(p)?;
    let cert = admm_reference(&ep, 2.0 * gamma, &Vector::zeros(ep.constraint_dim()), REFERENCE_BUDGET)?;
    let table = RelaxationSchedule::Constant(0.5).tabulate(iters)?;
    let mut hi = BoundReport::upper("dadmm_objective_upper", tol);
    let mut lo = BoundReport::lower("dadmm_objective_lower", tol);
    let mut feas = BoundReport::upper("dadmm_consensus_residual", tol);
    let mut rows = vec![TraceRow { obj_err: trace.objective[0].map(|o| o - cert.obj_star), ..TraceRow::new(0) }];
    for k in 0..iters {
        let o = trace.objective[k + 1].ok_or_else(|| Error::Unsupported("locals cannot be evaluated".into()))? - cert.obj_star;
        let (b_lo, b_hi) = admm_primal_bounds(&cert, &table, k, Averaging::Nonergodic);
        let b_feas = admm_feasibility_bounds(&cert, &table, k, Averaging::Nonergodic).derived;
        hi.push(k + 1, b_hi, o);
        lo.push(k + 1, b_lo, o);
        feas.push(k + 1, b_feas, trace.consensus[k]);
        rows.push(TraceRow {
            obj_err: Some(o),
            feas_gap: Some(trace.consensus[k].sqrt()),
            bound_obj_lo: Some(b_lo),
            bound_obj_hi: Some(b_hi),
            bound_feas: Some(b_feas.sqrt()),
            ..TraceRow::new(k + 1)
        });
    }
    let mut edges = BoundReport::upper("dadmm_messages_on_edges", Tolerance::abs(0.0));
    let stray = trace.messages.iter().filter(|m| !p.graph.has_edge(m.from, m.to)).count();
    edges.push(iters, 0.0, stray as f64);
    for r in [hi, lo, feas, edges] {
        out.add(r);
    }
    let xs = Vector::concat(trace.x.last().expect("round 0"));
    out.metric("solution_gap", xs.max_abs_diff(&cert.xstar));
    out.metric("messages", trace.messages.len() as f64);
    out.metric("obj_star", cert.obj_star);
    out.rows = rows;
    Ok(())
}

fn run_dadmm(cfg: &ExperimentConfig, p: &DistributedProblem, out: &mut Outcome) -> Result<()> {
    dadmm_checks(p, cfg.gamma, cfg.iters, out)
}

/// Load, run and write one config file.
pub fn run_config_file(path: &Path) -> Result<(Outcome, PathBuf)> {
    let cfg = super::config::load_config(path)?;
    run_to_dir(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(problem: &str, alg: Algorithm, iters: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(problem, alg);
        c.iters = iters;
        c
    }

    #[test]
    fn abs_example_rows() {
        let o = run_experiment(&cfg("abs_example", Algorithm::Prs, 100).with_param("eps", 0.1));
        assert_eq!(o.rows.len(), 101);
        assert!(o.passed(), "{:?} {:?}", o.error, o.suite.failures());
    }

    #[test]
    fn every_algorithm_passes_on_a_small_instance() {
        let cases = [
            cfg("lasso", Algorithm::Drs, 300),
            ExperimentConfig { gamma: 0.3, ..cfg("lasso", Algorithm::Fbs, 300) },
            cfg("lasso", Algorithm::Admm, 300),
            cfg("least_squares", Algorithm::Ppa, 300),
            cfg("square", Algorithm::Feasibility, 50),
            cfg("line_ball", Algorithm::Feasibility, 200),
            cfg("one_d_drs", Algorithm::Drs, 200),
            cfg("consensus", Algorithm::Dadmm, 200),
            cfg("affine_pair", Algorithm::Feasibility, 200),
        ];
        for c in cases {
            let o = run_experiment(&c);
            assert!(o.passed(), "{}: {:?} {:?}", c.label(), o.error, o.suite.failures());
            assert_eq!(o.rows.len(), c.iters + 1, "{}", c.label());
        }
    }

    #[test]
    fn one_d_check_only_for_scalar_drs() {
        let o = run_experiment(&cfg("one_d_drs", Algorithm::Drs, 50));
        assert!(o.suite.get("drs_1d_fpr").is_some());
        let o = run_experiment(&cfg("lasso", Algorithm::Drs, 50));
        assert!(o.suite.get("drs_1d_fpr").is_none());
    }

    #[test]
    fn monotone_fpr_checked_only_for_constant_relaxation() {
        let o = run_experiment(&cfg("lasso", Algorithm::Prs, 50));
        assert!(o.suite.get("fpr_monotone").is_some());
        let varying = ExperimentConfig { schedule: RelaxationSchedule::Polynomial { scale: 0.95, power: 0.1 }, ..cfg("lasso", Algorithm::Prs, 50) };
        let o = run_experiment(&varying);
        assert!(o.suite.get("fpr_monotone").is_none());
        assert!(o.passed(), "{:?}", o.suite.failures());
    }

    #[test]
    fn check_filter_and_failures_are_recorded() {
        let mut c = cfg("lasso", Algorithm::Admm, 20);
        c.checks = vec!["admm_step".into()];
        let o = run_experiment(&c);
        assert_eq!(o.suite.reports.len(), 1);
        let mut bad = cfg("lasso", Algorithm::Prs, 20);
        bad.z0 = Some(super::super::config::Z0Spec::Explicit(vec![1.0]));
        let o = run_experiment(&bad);
        assert!(o.error.is_some() && !o.passed());
    }

    #[test]
    fn same_config_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg("lasso", Algorithm::Prs, 100);
        c.z0 = Some(super::super::config::Z0Spec::Random { seed: 4, scale: 3.0 });
        let read = |sub: &str| {
            let mut c = c.clone();
            c.output = Some(dir.path().join(sub).to_string_lossy().into_owned());
            let (_, d) = run_to_dir(&c).unwrap();
            (std::fs::read(d.join("trace.csv")).unwrap(), std::fs::read(d.join("report.json")).unwrap())
        };
        let a = read("a");
        let b = read("b");
        assert!(a.0 == b.0 && !a.0.is_empty());
    }
}
