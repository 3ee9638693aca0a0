//! Two-set feasibility problems solved by relaxed PRS on indicator functions.

use std::cell::RefCell;

use crate::error::{invalid, Result};
use crate::km::{IterationTrace, RelaxationSchedule, ScheduleTable};
use crate::linalg::{ConvexSet, Vector};
use crate::prox::ProxFunction;
use crate::rates::{ergodic_feasibility_bound, nonergodic_feasibility_bound, Averaging};
use crate::report::{BoundReport, CheckSuite, Tolerance};
use crate::splitting::PrsRunner;

/// Find a point in `C_f ∩ C_g`.
#[derive(Clone, Debug)]
pub struct ConvexSetPair {
    pub c_f: ConvexSet,
    pub c_g: ConvexSet,
}

impl ConvexSetPair {
    pub fn new(c_f: ConvexSet, c_g: ConvexSet) -> Result<Self> {
        if c_f.dim() != c_g.dim() {
            return invalid("sets live in different dimensions");
        }
        Ok(ConvexSetPair { c_f, c_g })
    }

    pub fn functions(&self) -> (ProxFunction, ProxFunction) {
        (ProxFunction::Indicator(self.c_f.clone()), ProxFunction::Indicator(self.c_g.clone()))
    }
}

#[derive(Clone, Debug)]
pub struct FeasibilityTrace {
    pub trace: IterationTrace,
    /// `d_{C_g}(x_f^k)`
    pub dist_xf_to_cg: Vec<f64>,
    /// `d_{C_f}(x_g^k)`
    pub dist_xg_to_cf: Vec<f64>,
}

pub fn run_feasibility(pair: &ConvexSetPair, gamma: f64, schedule: &RelaxationSchedule, z0: &Vector, iters: usize) -> Result<FeasibilityTrace> {
    let (f, g) = pair.functions();
    let dists = RefCell::new((Vec::with_capacity(iters + 1), Vec::with_capacity(iters + 1)));
    let trace = PrsRunner::new(&f, &g, gamma)
        .schedule(schedule.clone())
        .observe(|_, _, tri| {
            let mut d = dists.borrow_mut();
            d.0.push(pair.c_g.distance(&tri.x_f));
            d.1.push(pair.c_f.distance(&tri.x_g));
        })
        .run(z0, iters)?;
    let (dist_xf_to_cg, dist_xg_to_cf) = dists.into_inner();
    Ok(FeasibilityTrace { trace, dist_xf_to_cg, dist_xg_to_cf })
}

/// Bound on `||x_g - x_f||` (nonergodic) or `||xbar_g - xbar_f||` (ergodic) at `k`.
pub fn feasibility_gap_bound(dist0: f64, table: &ScheduleTable, k: usize, mode: Averaging) -> f64 {
    match mode {
        Averaging::Ergodic => ergodic_feasibility_bound(dist0, table.big_lambda[k]),
        Averaging::Nonergodic => nonergodic_feasibility_bound(dist0, table.tau_floor[k], k).sqrt(),
    }
}

/// Both feasibility gaps against their bounds. `x_f` lies in `C_f`, so
/// `d_{C_g}(x_f) <= ||x_f - x_g||` and likewise for `x_g`.
pub fn check_feasibility(ft: &FeasibilityTrace, dist0: f64, table: &ScheduleTable, tol: Tolerance) -> CheckSuite {
    let mut erg = BoundReport::upper("ergodic_feasibility", tol);
    let mut non = BoundReport::upper("nonergodic_feasibility", tol);
    let mut dist = BoundReport::upper("nonergodic_set_distance", tol);
    for (i, r) in ft.trace.records.iter().enumerate() {
        if let Some(g) = r.ergodic_feas_gap {
            erg.push(r.k, feasibility_gap_bound(dist0, table, r.k, Averaging::Ergodic), g);
        }
        let b = feasibility_gap_bound(dist0, table, r.k, Averaging::Nonergodic);
        if let Some(g) = r.feas_gap {
            non.push(r.k, b, g);
        }
        dist.push(r.k, b, ft.dist_xf_to_cg[i].max(ft.dist_xg_to_cf[i]));
    }
    let mut s = CheckSuite::new();
    s.add(erg);
    s.add(non);
    s.add(dist);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subspace;

    #[test]
    fn line_and_ball_intersect() {
        let line = ConvexSet::Subspace(Subspace::from_basis(2, &[Vector(vec![1.0, 1.0])]).unwrap());
        let ball = ConvexSet::ball(Vector(vec![2.0, 0.0]), 1.5).unwrap();
        let pair = ConvexSetPair::new(line, ball).unwrap();
        let ft = run_feasibility(&pair, 1.0, &RelaxationSchedule::Constant(0.5), &Vector(vec![-3.0, 4.0]), 400).unwrap();
        assert!(ft.dist_xf_to_cg.last().unwrap() < &1e-6);
        let table = RelaxationSchedule::Constant(0.5).tabulate(400).unwrap();
        // crude dist0 upper bound: the bound only grows with dist0
        let s = check_feasibility(&ft, 10.0, &table, Tolerance::DEFAULT);
        assert!(s.passed(), "{:?}", s.failures());
    }
}
