//! Property tests: prox maps are firmly nonexpansive, PRS iterates satisfy the
//! per-step inequalities and KM bounds, and the summable-sequence lemma holds.

use opsplit::km::RelaxationSchedule;
use opsplit::prox::firm_nonexpansive_violation;
use opsplit::rates::{check_fundamental_inequalities, verify_summable_lemma, LemmaPart, SequenceCheck};
use opsplit::report::Tolerance;
use opsplit::splitting::{fixed_point_reference, PrsRunner};
use opsplit::experiments::runner::km_checks;
use opsplit::{ConvexSet, ProxFunction, Subspace, Vector};
use proptest::prelude::*;

const DIM: usize = 4;

fn vec_strategy() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-10.0..10.0f64, DIM).prop_map(Vector)
}

fn prox_strategy() -> impl Strategy<Value = ProxFunction> {
    prop_oneof![
        (0.01..5.0f64).prop_map(|s| ProxFunction::l1(s).unwrap()),
        (0.01..5.0f64, vec_strategy()).prop_map(|(s, c)| ProxFunction::l1_centered(s, c).unwrap()),
        prop::collection::vec(0.0..10.0f64, DIM).prop_map(|w| ProxFunction::diagonal_quadratic(w).unwrap()),
        (vec_strategy(), 0.1..5.0f64).prop_map(|(c, r)| ProxFunction::Indicator(ConvexSet::ball(c, r).unwrap())),
        Just(ProxFunction::indicator_subspace(Subspace::coordinate(DIM, &[0, 2]).unwrap())),
        Just(ProxFunction::DistanceToSubspace(Subspace::coordinate(DIM, &[1]).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_firmly_nonexpansive(f in prox_strategy(), gamma in 0.05..5.0f64, pairs in prop::collection::vec((vec_strategy(), vec_strategy()), 1..8)) {
        let v = firm_nonexpansive_violation(&f, gamma, &pairs).unwrap();
        prop_assert!(v <= 1e-9, "violation {v}");
    }

    #[test]
    fn prs_satisfies_per_step_inequalities_and_km_bounds(
        rho in 0.05..2.0f64,
        center in vec_strategy(),
        weights in prop::collection::vec(0.1..5.0f64, DIM),
        gamma in 0.2..3.0f64,
        lambdas in prop::collection::vec(0.05..=1.0f64, 61),
        z0 in vec_strategy(),
    ) {
        let f = ProxFunction::diagonal_quadratic(weights).unwrap();
        let g = ProxFunction::l1_centered(rho, center).unwrap();
        let cert = fixed_point_reference(&f, &g, gamma, &z0, 1_000_000).unwrap();
        let sched = RelaxationSchedule::Explicit(lambdas);
        let trace = PrsRunner::new(&f, &g, gamma).schedule(sched.clone()).reference(cert.zstar.clone()).run(&z0, 60).unwrap();
        let tol = Tolerance::DEFAULT;
        let fi = check_fundamental_inequalities(&trace, &cert, tol).unwrap();
        prop_assert!(fi.passed(), "{:?}", fi.failures());
        let km = km_checks(&trace, &sched.tabulate(60).unwrap(), cert.dist0 * cert.dist0, tol).unwrap();
        prop_assert!(km.passed(), "{:?}", km.failures());
    }

    #[test]
    fn running_min_and_monotone_parts_hold(a in prop::collection::vec(0.0..100.0f64, 1..200), seed in 0u64..1000) {
        let lambda: Vec<f64> = (0..a.len()).map(|k| 0.05 + 0.95 * (((k as u64 + seed) * 7919 % 101) as f64 / 101.0)).collect();
        let r = verify_summable_lemma(&SequenceCheck::new(LemmaPart::RunningMin, a.clone(), lambda.clone()), Tolerance::DEFAULT).unwrap();
        prop_assert!(r.passed());
        let mut sorted = a;
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let r = verify_summable_lemma(&SequenceCheck::new(LemmaPart::Monotone, sorted, lambda), Tolerance::DEFAULT).unwrap();
        prop_assert!(r.passed());
    }

    #[test]
    fn up_to_errors_part_holds(start in 0.0..10.0f64, shrink in prop::collection::vec(0.0..=1.0f64, 2..200), scale in 0.0..1.0f64) {
        let n = shrink.len();
        let e: Vec<f64> = (0..n).map(|k| scale / ((k + 1) as f64).powi(2)).collect();
        let mut a = vec![start];
        for k in 0..n - 1 {
            a.push(shrink[k] * (a[k] + e[k]));
        }
        let r = verify_summable_lemma(&SequenceCheck::new(LemmaPart::UpToErrors, a, vec![0.5; n]).with_errors(e), Tolerance::DEFAULT).unwrap();
        prop_assert!(r.passed());
    }
}
