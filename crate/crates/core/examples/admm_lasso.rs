// Relaxed ADMM on lasso (`min 1/2|Mx - b|^2 + rho|y|_1` with `x - y = 0`),
// its equivalence with PRS on the dual, and the ADMM bounds.

use opsplit::admm::{admm_reference, check_admm_bounds, check_step_identity, dual_functions, run_relaxed_admm, LinearlyConstrainedProblem};
use opsplit::experiments::problems::random_lasso_data;
use opsplit::km::RelaxationSchedule;
use opsplit::prox::QuadraticForm;
use opsplit::report::Tolerance;
use opsplit::splitting::run_relaxed_prs;
use opsplit::{Error, LinearMap, ProxFunction, Result, Vector};

pub fn run_example() -> Result<()> {
    let (m, b) = random_lasso_data(12, 6, 2)?;
    let p = LinearlyConstrainedProblem::new(
        ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?),
        ProxFunction::l1(0.3)?,
        LinearMap::identity(6),
        LinearMap::scaled(-1.0, 6),
        Vector::zeros(6),
    )?;
    let gamma = 1.0;
    let sched = RelaxationSchedule::Constant(0.5);
    let z0 = Vector::zeros(6);
    let iters = 1500;
    let trace = run_relaxed_admm(&p, gamma, &sched, &z0, iters)?;
    let last = trace.last().expect("records");
    println!("x = {:?}", last.x.0.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    println!("residual |Ax + By - b| = {:.2e}", last.residual.norm());

    let (df, dg) = dual_functions(&p);
    let prs = run_relaxed_prs(&df, &dg, gamma, &sched, &z0, iters)?;
    let gap = trace.records.iter().zip(&prs.records).map(|(a, b)| a.z.max_abs_diff(b.z.as_ref().unwrap())).fold(0.0, f64::max);
    println!("largest gap between ADMM and dual PRS iterates: {gap:.1e}");

    let cert = admm_reference(&p, gamma, &z0, 1_000_000)?;
    let mut suite = check_admm_bounds(&p, &trace, &cert, &sched.tabulate(iters)?, Tolerance::DEFAULT)?;
    suite.add(check_step_identity(&trace, Tolerance::abs(1e-13)));
    if gap > 1e-10 || !suite.passed() {
        return Err(Error::InvalidArgument(format!("ADMM checks failed: gap {gap:e}, {:?}", suite.failures())));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("ADMM example");
}
