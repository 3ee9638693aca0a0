// KM with additive errors of norm (k+1)^-1.5: the accumulated-error FPR
// bound and the tail check still hold.

use opsplit::experiments::problems::AffinePair;
use opsplit::km::{check_fpr_tail, check_inexact_fpr_bound, run_km, ErrorSchedule, RelaxationSchedule, TraceOptions};
use opsplit::report::Tolerance;
use opsplit::{Error, Result, Vector};

pub fn run_example() -> Result<()> {
    let pair = AffinePair::random(12, 3, 4, 9)?;
    let z0 = Vector((0..12).map(|i| i as f64 - 6.0).collect());
    let zstar = pair.common_point(&z0);
    let t = |z: &Vector| Ok(pair.c1.project(&pair.c2.project(z)));
    let sched = RelaxationSchedule::Constant(0.5);
    let iters = 4000;
    // Alternate between two coordinate directions so the error never settles.
    let errors = ErrorSchedule::new(
        Box::new(|k, n| {
            let mut e = Vector::zeros(n);
            e[k % n] = ((k + 1) as f64).powf(-1.5);
            e
        }),
        Box::new(|k| 0.5 * ((k + 1) as f64).powf(-1.5)),
    );
    errors.validate(&sched, 12, iters)?;
    let trace = run_km(&t, &sched, &z0, iters, Some(&errors), &TraceOptions::with_reference(zstar.clone()).scalars_only())?;
    let table = sched.tabulate(iters)?;
    let bound = check_inexact_fpr_bound(&trace, &table, z0.dist_sq(&zstar), Tolerance::DEFAULT)?;
    let tail = check_fpr_tail(&trace, Tolerance::DEFAULT);
    println!("inexact bound pass={} worst margin={:.3e}", bound.passed(), bound.worst().map_or(f64::NAN, |e| e.margin));
    println!("tail pass={}", tail.passed());
    if !(bound.passed() && tail.passed()) {
        return Err(Error::InvalidArgument("inexact KM checks failed".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("inexact KM example");
}
