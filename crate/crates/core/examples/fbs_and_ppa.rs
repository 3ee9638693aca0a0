// Forward-backward splitting on lasso and the proximal point method on
// least squares, checked against their objective and FPR rates.

use opsplit::experiments::problems::random_lasso_data;
use opsplit::experiments::runner::fbs_checks;
use opsplit::km::TraceOptions;
use opsplit::prox::QuadraticForm;
use opsplit::report::Tolerance;
use opsplit::splitting::{fbs_reference, run_fbs, run_ppa, FbsConfig};
use opsplit::{Error, ProxFunction, Result, Vector};

pub fn run_example() -> Result<()> {
    let (m, b) = random_lasso_data(20, 10, 4)?;
    let l1 = ProxFunction::l1(0.1)?;
    let ls = ProxFunction::Quadratic(QuadraticForm::least_squares(&m, &b)?);
    let beta = ls.beta().expect("smooth");
    let z0 = Vector(vec![3.0; 10]);
    let iters = 2000;
    for gamma in [beta, 1.5 * beta] {
        let cfg = FbsConfig::new(gamma, beta)?;
        let cert = fbs_reference(&l1, &ls, beta, &z0, 1_000_000)?;
        let trace = run_fbs(&l1, &ls, gamma, &z0, iters, &TraceOptions::default().scalars_only())?;
        let suite = fbs_checks(&trace, &cfg, cert.obj_star, z0.dist(&cert.xstar), Tolerance::DEFAULT)?;
        println!("FBS gamma/beta={:.1} alpha={:.3} pass={}", gamma / beta, cfg.alpha(), suite.passed());
        if !suite.passed() {
            return Err(Error::InvalidArgument(format!("FBS checks failed: {:?}", suite.failures())));
        }
    }
    // Proximal point: minimizers of least squares form an affine set; the run converges to one of them.
    let trace = run_ppa(&ls, 1.0, &z0, iters, &TraceOptions::default().scalars_only())?;
    let first = trace.records[0].objective.unwrap();
    let last = trace.records[iters].objective.unwrap();
    println!("PPA objective {first:.4} -> {last:.4}");
    if last.is_nan() || last > first {
        return Err(Error::InvalidArgument("PPA objective increased".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("FBS example");
}
