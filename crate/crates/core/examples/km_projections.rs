// Krasnosel'skii-Mann iteration on a composition of two affine projections,
// checked against the FPR bound, Fejer monotonicity and summability.

use opsplit::experiments::problems::AffinePair;
use opsplit::km::{check_fejer, check_fpr_bound, check_fpr_monotone, check_fpr_summability, run_km, RelaxationSchedule, TraceOptions};
use opsplit::report::{CheckSuite, Tolerance};
use opsplit::{Error, Result, Vector};

pub fn run_example() -> Result<()> {
    let pair = AffinePair::random(20, 4, 6, 42)?;
    let z0 = Vector((0..20).map(|i| (i as f64 * 0.7).sin() * 5.0).collect());
    let zstar = pair.common_point(&z0);
    let t = |z: &Vector| Ok(pair.c1.project(&pair.c2.project(z)));
    let sched = RelaxationSchedule::Constant(0.5);
    let iters = 2000;
    let trace = run_km(&t, &sched, &z0, iters, None, &TraceOptions::with_reference(zstar.clone()).scalars_only())?;
    let table = sched.tabulate(iters)?;
    let d0sq = z0.dist_sq(&zstar);

    let tol = Tolerance::DEFAULT;
    let mut suite = CheckSuite::new();
    suite.add(check_fpr_bound(&trace, &table, d0sq, tol));
    suite.add(check_fejer(&trace, tol)?);
    suite.add(check_fpr_monotone(&trace, tol));
    suite.add(check_fpr_summability(&trace, &table, d0sq, tol));
    for s in suite.summaries() {
        println!("{:<16} pass={} checked={}", s.name, s.pass, s.checked);
    }
    let last = trace.records.last().expect("nonempty trace");
    println!("fpr at k={iters}: {:.3e}, distance^2 to z*: {:.3e}", last.fpr, last.dist_sq.unwrap_or(f64::NAN));
    if !suite.passed() {
        return Err(Error::InvalidArgument(format!("failed checks: {:?}", suite.failures())));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("km example");
}
