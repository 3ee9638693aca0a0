// Three ADMM splittings of ridge-regularized least squares. All reach the
// same model.

use nalgebra::DMatrix;
use opsplit::admm::{run_relaxed_admm, split_across_examples, split_across_features, split_auxiliary, LinearlyConstrainedProblem};
use opsplit::km::RelaxationSchedule;
use opsplit::{Error, LinearMap, ProxFunction, Result, Vector};

fn solve(p: &LinearlyConstrainedProblem, iters: usize) -> Result<(Vector, Vector)> {
    let z0 = Vector::zeros(p.constraint_dim());
    let t = run_relaxed_admm(p, 1.0, &RelaxationSchedule::Constant(0.5), &z0, iters)?;
    let last = t.last().expect("records");
    Ok((last.x.clone(), last.y.clone()))
}

pub fn run_example() -> Result<()> {
    let m = DMatrix::from_fn(6, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
    let b = Vector((0..6).map(|i| i as f64 * 0.5 - 1.0).collect());
    let loss = || ProxFunction::diagonal_quadratic(vec![1.0; 6]);
    let ridge = |n: usize| ProxFunction::diagonal_quadratic(vec![0.1; n]);
    let iters = 3000;

    // Closed form: (M^T M + 0.1 I) x = M^T b.
    let exact = (m.transpose() * &m + DMatrix::identity(4, 4) * 0.1).lu().solve(&(m.transpose() * nalgebra::DVector::from_vec(b.0.clone()))).expect("invertible");
    let exact = Vector(exact.iter().copied().collect());

    let aux = split_auxiliary(loss()?, ridge(4)?, LinearMap::from_matrix(m.clone())?, b.clone())?;
    let (_, y) = solve(&aux, iters)?;

    let top = LinearMap::from_matrix(m.rows(0, 3).into_owned())?;
    let bottom = LinearMap::from_matrix(m.rows(3, 3).into_owned())?;
    let half = || ProxFunction::diagonal_quadratic(vec![1.0; 3]);
    let bb = b.split(&[3, 3]);
    let ex = split_across_examples(vec![half()?, half()?], ridge(4)?, vec![top, bottom], bb)?;
    let (_, y_ex) = solve(&ex, iters)?;

    let left = LinearMap::from_matrix(m.columns(0, 2).into_owned())?;
    let right = LinearMap::from_matrix(m.columns(2, 2).into_owned())?;
    let feat = split_across_features(loss()?, vec![ridge(2)?, ridge(2)?], vec![left, right], b)?;
    let (_, y_feat) = solve(&feat, iters)?;

    for (name, v) in [("auxiliary", &y), ("across examples", &y_ex), ("across features", &y_feat)] {
        let gap = v.max_abs_diff(&exact);
        println!("{name:<16} max deviation from closed form {gap:.2e}");
        if gap > 1e-6 {
            return Err(Error::InvalidArgument(format!("{name} split did not reach the ridge solution")));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("model fitting example");
}
