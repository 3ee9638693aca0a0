// DRS as a feasibility method for a line and a ball, with the ergodic and
// nonergodic feasibility bounds.

use opsplit::feasibility::{check_feasibility, run_feasibility, ConvexSetPair};
use opsplit::km::RelaxationSchedule;
use opsplit::report::Tolerance;
use opsplit::splitting::fixed_point_reference;
use opsplit::{ConvexSet, Error, Result, Subspace, Vector};

pub fn run_example() -> Result<()> {
    let line = ConvexSet::affine(Subspace::coordinate(2, &[0])?, Vector(vec![0.0, 0.5]))?;
    let ball = ConvexSet::ball(Vector(vec![1.0, 0.0]), 1.0)?;
    let pair = ConvexSetPair::new(line, ball)?;
    let z0 = Vector(vec![-3.0, 4.0]);
    let sched = RelaxationSchedule::Constant(0.5);
    let iters = 500;
    let (f, g) = pair.functions();
    let cert = fixed_point_reference(&f, &g, 1.0, &z0, 1_000_000)?;
    let ft = run_feasibility(&pair, 1.0, &sched, &z0, iters)?;
    let suite = check_feasibility(&ft, cert.dist0, &sched.tabulate(iters)?, Tolerance::DEFAULT);
    println!("distance of x_f to the ball after {iters} steps: {:.2e}", ft.dist_xf_to_cg[iters]);
    if !suite.passed() {
        return Err(Error::InvalidArgument(format!("feasibility checks failed: {:?}", suite.failures())));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("feasibility example");
}
