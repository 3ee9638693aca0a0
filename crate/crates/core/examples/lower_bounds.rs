// Worst-case constructions: the DRS FPR floor on rotating lines, the PPA
// floor on a diagonal quadratic, and the decay exponent of d_V.

use opsplit::counterexamples::{distance_lower_setup, optimal_fpr_setup, ppa_diag_setup};
use opsplit::km::TraceOptions;
use opsplit::rates::fit_decay_exponent;
use opsplit::splitting::{run_ppa, PrsRunner};
use opsplit::{Error, Result};

pub fn run_example() -> Result<()> {
    let iters = 100;
    let s = optimal_fpr_setup(0.75, 20_000)?;
    let (f, g) = s.space.indicator_pair();
    let trace = PrsRunner::new(&f, &g, 1.0).scalars_only().no_objective().no_ergodic().run(&s.z0, iters)?;
    let worst = (1..=iters).map(|k| trace.records[k].fpr / 4.0 / s.truncated_lower_bound(k)).fold(f64::INFINITY, f64::min);
    println!("DRS FPR over truncated floor, smallest ratio: {worst:.3}");

    let p = ppa_diag_setup(1.0, 1.0, 20_000, iters)?;
    let ppa = run_ppa(&p.f, 1.0, &p.z0, iters, &TraceOptions::default().scalars_only())?;
    let ppa_worst = (0..=iters).map(|k| ppa.records[k].fpr / p.fpr_lower(k)).fold(f64::INFINITY, f64::min);
    println!("PPA FPR over floor, smallest ratio: {ppa_worst:.3}");

    let d = distance_lower_setup(0.75, 20_000)?;
    let (fd, gd) = d.space.distance_pair();
    let v = d.space.v_subspace();
    let mut dv = Vec::new();
    PrsRunner::new(&fd, &gd, d.gamma).scalars_only().no_objective().no_ergodic().observe(|_, _, tri| dv.push(v.distance(&tri.x_g))).run(&d.z0, iters)?;
    let fit = fit_decay_exponent(&dv, 10, iters)?;
    println!("d_V(x_g) decays like k^{:.3}", fit.exponent);
    if worst < 1.0 || ppa_worst < 1.0 || fit.exponent < -0.85 {
        return Err(Error::InvalidArgument("a lower bound was violated".into()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("lower bound example");
}
