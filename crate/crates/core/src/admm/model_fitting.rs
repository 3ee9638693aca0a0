//! Three ways to split `min l(M x - b) + r(x)` into ADMM form.

use nalgebra::DMatrix;

use super::LinearlyConstrainedProblem;
use crate::error::{invalid, Error, Result};
use crate::linalg::{LinearMap, Vector};
use crate::prox::ProxFunction;

/// `l(M u - c)` as a function of `u`; only quadratic losses compose in closed form.
fn compose(l: &ProxFunction, m: &LinearMap, c: &Vector) -> Result<ProxFunction> {
    let q = l
        .as_quadratic(m.rows())
        .ok_or_else(|| Error::Unsupported(format!("{} loss cannot be composed with a linear map", l.kind_name())))?;
    Ok(ProxFunction::Quadratic(q.compose_affine(m, c)?))
}

/// `min l(x) + r(y)` subject to `M y - x = b`: `A = -I`, `B = M`.
pub fn split_auxiliary(l: ProxFunction, r: ProxFunction, m: LinearMap, b: Vector) -> Result<LinearlyConstrainedProblem> {
    if m.rows() != b.dim() {
        return invalid("M and b disagree on the number of rows");
    }
    let rows = m.rows();
    LinearlyConstrainedProblem::new(l, r, LinearMap::scaled(-1.0, rows), m, b)
}

/// `min sum_i l_i(M_i x_i - b_i) + r(y)` subject to `x_i - y = 0`:
/// `A = I` on the stacked `x`, `B y = (-y, ..., -y)`.
pub fn split_across_examples(l_blocks: Vec<ProxFunction>, r: ProxFunction, m_blocks: Vec<LinearMap>, b_blocks: Vec<Vector>) -> Result<LinearlyConstrainedProblem> {
    let nb = l_blocks.len();
    if nb == 0 || m_blocks.len() != nb || b_blocks.len() != nb {
        return invalid("need one loss, matrix and output block per example group");
    }
    let n = m_blocks[0].cols();
    if m_blocks.iter().zip(&b_blocks).any(|(m, b)| m.cols() != n || m.rows() != b.dim()) {
        return invalid("example blocks must share columns and match their outputs");
    }
    let parts = l_blocks.iter().zip(&m_blocks).zip(&b_blocks).map(|((l, m), b)| compose(l, m, b)).collect::<Result<Vec<_>>>()?;
    let f = ProxFunction::block_separable(parts, vec![n; nb])?;
    let stack = DMatrix::from_fn(n * nb, n, |i, j| if i % n == j { -1.0 } else { 0.0 });
    LinearlyConstrainedProblem::new(f, r, LinearMap::identity(n * nb), LinearMap::from_matrix(stack)?, Vector::zeros(n * nb))
}

/// `min l(sum_i x_i - b) + sum_i r_i(y_i)` subject to `x_i - M_i y_i = 0`:
/// `A = I` on the stacked `x`, `B y = -(M_1 y_1, ..., M_C y_C)`.
pub fn split_across_features(l: ProxFunction, r_blocks: Vec<ProxFunction>, m_col_blocks: Vec<LinearMap>, b: Vector) -> Result<LinearlyConstrainedProblem> {
    let nb = r_blocks.len();
    if nb == 0 || m_col_blocks.len() != nb {
        return invalid("need one regularizer per column block");
    }
    let m = b.dim();
    if m_col_blocks.iter().any(|mi| mi.rows() != m) {
        return invalid("column blocks must have as many rows as b");
    }
    let sizes: Vec<usize> = m_col_blocks.iter().map(|mi| mi.cols()).collect();
    let n: usize = sizes.iter().sum();
    let sum = LinearMap::from_matrix(DMatrix::from_fn(m, m * nb, |i, j| if j % m == i { 1.0 } else { 0.0 }))?;
    let f = compose(&l, &sum, &b)?;
    let g = ProxFunction::block_separable(r_blocks, sizes)?;
    let mut bm = DMatrix::zeros(m * nb, n);
    let mut col = 0;
    for (i, mi) in m_col_blocks.iter().enumerate() {
        bm.view_mut((i * m, col), (m, mi.cols())).copy_from(&(-mi.matrix()));
        col += mi.cols();
    }
    LinearlyConstrainedProblem::new(f, g, LinearMap::identity(m * nb), LinearMap::from_matrix(bm)?, Vector::zeros(m * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::admm_reference;
    use crate::prox::QuadraticForm;

    fn half_sq(m: usize) -> ProxFunction {
        ProxFunction::diagonal_quadratic(vec![1.0; m]).unwrap()
    }

    fn data() -> (LinearMap, Vector) {
        let m = LinearMap::from_rows(&[vec![1.0, 0.5], vec![0.0, 2.0], vec![1.0, -1.0], vec![0.3, 0.3]]).unwrap();
        (m, Vector(vec![1.0, -2.0, 0.5, 0.1]))
    }

    /// Normal-equation solution of `min 1/2 ||M x - b||^2`.
    fn least_squares(m: &LinearMap, b: &Vector) -> Vector {
        let mt = m.matrix().transpose();
        let sol = (&mt * m.matrix()).cholesky().unwrap().solve(&(&mt * b.to_dvector()));
        Vector::from_dvector(&sol)
    }

    #[test]
    fn auxiliary_least_squares_matches_normal_equations() {
        let (m, b) = data();
        let p = split_auxiliary(half_sq(4), ProxFunction::Zero, m.clone(), b.clone()).unwrap();
        let c = admm_reference(&p, 1.0, &Vector::zeros(4), 200_000).unwrap();
        assert!(c.ystar.max_abs_diff(&least_squares(&m, &b)) < 1e-6);
    }

    #[test]
    fn auxiliary_identity_is_consensus() {
        let p = split_auxiliary(half_sq(2), ProxFunction::Zero, LinearMap::identity(2), Vector::zeros(2)).unwrap();
        let x = Vector(vec![1.0, 2.0]);
        assert_eq!(p.residual(&x, &x), Vector::zeros(2));
    }

    #[test]
    fn auxiliary_lasso_satisfies_kkt() {
        let (m, b) = data();
        let rho = 0.3;
        let p = split_auxiliary(half_sq(4), ProxFunction::l1(rho).unwrap(), m.clone(), b.clone()).unwrap();
        let c = admm_reference(&p, 1.0, &Vector::zeros(4), 200_000).unwrap();
        // M^T (b - M y) must lie in rho * subdifferential of |.|_1 at y
        let g = m.apply_t(&(&b - &m.apply(&c.ystar)));
        for i in 0..2 {
            if c.ystar[i].abs() > 1e-7 {
                assert!((g[i] - rho * c.ystar[i].signum()).abs() < 1e-6);
            } else {
                assert!(g[i].abs() <= rho + 1e-6);
            }
        }
    }

    #[test]
    fn examples_split_matches_monolithic() {
        let (m, b) = data();
        let m1 = LinearMap::from_matrix(m.matrix().rows(0, 2).into_owned()).unwrap();
        let m2 = LinearMap::from_matrix(m.matrix().rows(2, 2).into_owned()).unwrap();
        let b1 = Vector(b.0[..2].to_vec());
        let b2 = Vector(b.0[2..].to_vec());
        let p = split_across_examples(vec![half_sq(2), half_sq(2)], ProxFunction::Zero, vec![m1, m2], vec![b1, b2]).unwrap();
        let c = admm_reference(&p, 1.0, &Vector::zeros(4), 200_000).unwrap();
        assert!(c.ystar.max_abs_diff(&least_squares(&m, &b)) < 1e-6);
    }

    #[test]
    fn examples_single_block_has_auxiliary_shape() {
        let (m, b) = data();
        let p = split_across_examples(vec![half_sq(4)], ProxFunction::Zero, vec![m.clone()], vec![b.clone()]).unwrap();
        assert_eq!(p.constraint_dim(), 2);
        let q = QuadraticForm::least_squares(&m, &b).unwrap();
        let x = Vector(vec![0.4, -0.2]);
        assert!((p.f.eval(&x).unwrap() - q.eval(&x)).abs() < 1e-12);
    }

    #[test]
    fn examples_quadratic_consensus_closed_form() {
        // 1/2 (x - 1)^2 + 1/2 (x + 3)^2 is minimized at -1
        let one = LinearMap::identity(1);
        let p = split_across_examples(
            vec![half_sq(1), half_sq(1)],
            ProxFunction::Zero,
            vec![one.clone(), one],
            vec![Vector::scalar(1.0), Vector::scalar(-3.0)],
        )
        .unwrap();
        let c = admm_reference(&p, 1.0, &Vector::zeros(2), 100_000).unwrap();
        assert!((c.ystar[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn features_split_matches_monolithic() {
        let (m, b) = data();
        let c1 = LinearMap::from_matrix(m.matrix().columns(0, 1).into_owned()).unwrap();
        let c2 = LinearMap::from_matrix(m.matrix().columns(1, 1).into_owned()).unwrap();
        let p = split_across_features(half_sq(4), vec![ProxFunction::Zero, ProxFunction::Zero], vec![c1, c2], b.clone()).unwrap();
        let c = admm_reference(&p, 1.0, &Vector::zeros(8), 200_000).unwrap();
        assert!(c.ystar.max_abs_diff(&least_squares(&m, &b)) < 1e-6);
    }

    #[test]
    fn shape_errors() {
        let (m, _) = data();
        assert!(split_auxiliary(half_sq(4), ProxFunction::Zero, m.clone(), Vector::zeros(3)).is_err());
        assert!(split_across_features(half_sq(3), vec![ProxFunction::Zero], vec![m], Vector::zeros(3)).is_err());
        assert!(matches!(
            split_across_examples(vec![ProxFunction::l1(1.0).unwrap()], ProxFunction::Zero, vec![LinearMap::identity(1)], vec![Vector::scalar(0.0)]),
            Err(Error::Unsupported(_))
        ));
    }
}
