// Relaxed Peaceman-Rachford on a small lasso: reference solution, objective
// bands and the per-step inequalities.

use opsplit::experiments::problems::random_lasso_data;
use opsplit::km::RelaxationSchedule;
use opsplit::prox::QuadraticForm;
use opsplit::rates::{check_ergodic_bands, check_fundamental_inequalities, check_nonergodic_bands};
use opsplit::report::Tolerance;
use opsplit::splitting::{fixed_point_reference, PrsRunner};
use opsplit::{Error, ProxFunction, Result, Vector};

pub fn run_example() -> Result<()> {
    let (m, b) = random_lasso_data(15, 8, 1)?;
    let f = ProxFunction::l1(0.2)?;
    let g = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?);
    let gamma = 0.8;
    let z0 = Vector::zeros(8);
    let cert = fixed_point_reference(&f, &g, gamma, &z0, 1_000_000)?;
    println!("optimal value {:.6}, reference residual {:.1e}", cert.obj_star, cert.residual);

    let sched = RelaxationSchedule::Polynomial { scale: 0.95, power: 0.1 };
    let iters = 1000;
    let trace = PrsRunner::new(&f, &g, gamma).schedule(sched.clone()).reference(cert.zstar.clone()).run(&z0, iters)?;
    let table = sched.tabulate(iters)?;
    let tol = Tolerance::DEFAULT;
    let mut suite = check_fundamental_inequalities(&trace, &cert, tol)?;
    suite.extend(check_ergodic_bands(&trace, &cert, &table, tol)?);
    suite.extend(check_nonergodic_bands(&trace, &cert, &table, tol)?);
    for k in [0, 10, 100, 1000] {
        let r = &trace.records[k];
        println!("k={k:>4} objective error {:+.3e} ergodic {:+.3e}", r.objective.unwrap() - cert.obj_star, r.ergodic_objective.unwrap() - cert.obj_star);
    }
    if !suite.passed() {
        return Err(Error::InvalidArgument(format!("failed checks: {:?}", suite.failures())));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("relaxed PRS example");
}
