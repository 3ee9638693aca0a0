//! Solvers for `argmin_u h(u) + (gamma/2) ||M u - v||^2`, the only kind of
//! subproblem ADMM needs.

use nalgebra::{Cholesky, Dyn, SVD};

use crate::error::{invalid, Error, Result};
use crate::linalg::{LinearMap, Vector};
use crate::prox::{PreparedProx, ProxFunction, QuadraticForm};

/// Stopping tolerance of the inner forward-backward loop.
pub const INNER_TOL: f64 = 1e-10;
/// Iteration cap of the inner forward-backward loop.
pub const INNER_CAP: usize = 100_000;

enum Method<'a> {
    /// `(Q + gamma M^T M) u = gamma M^T v - q`
    Cholesky(Cholesky<f64, Dyn>, QuadraticForm),
    /// Singular system; minimum-norm solution.
    Pseudo(SVD<f64, Dyn, Dyn>, QuadraticForm),
    /// `M^T M = s I`: `u = prox_{h/(gamma s)}(M^T v / s)`.
    Scaled(PreparedProx<'a>, f64),
    /// Proximal gradient on the coupling term.
    Inner(PreparedProx<'a>, f64),
}

/// Which solver was picked; exposed for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Factorized,
    PseudoInverse,
    Prox,
    InnerFbs,
}

/// Subproblem solver bound to `h`, `M` and `gamma`.
pub struct SubproblemSolver<'a> {
    m: &'a LinearMap,
    gamma: f64,
    method: Method<'a>,
}

impl<'a> SubproblemSolver<'a> {
    pub fn new(h: &'a ProxFunction, m: &'a LinearMap, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return invalid("penalty must be positive and finite");
        }
        let n = m.cols();
        let method = if let Some(q) = h.as_quadratic(n) {
            let sys = q.matrix() + m.matrix().transpose() * m.matrix() * gamma;
            match Cholesky::new(sys.clone()) {
                Some(c) => Method::Cholesky(c, q),
                None => Method::Pseudo(SVD::new(sys, true, true), q),
            }
        } else if let Some(s) = m.gram_scalar().filter(|s| *s > 0.0) {
            Method::Scaled(h.prepare(1.0 / (gamma * s))?, s)
        } else {
            let l = m.op_norm_sq();
            if l <= 0.0 {
                return Err(Error::Unsupported(format!("{} subproblem with a zero map", h.kind_name())));
            }
            let step = 1.0 / (gamma * l);
            Method::Inner(h.prepare(step)?, step)
        };
        Ok(SubproblemSolver { m, gamma, method })
    }

    pub fn kind(&self) -> SolverKind {
        match self.method {
            Method::Cholesky(..) => SolverKind::Factorized,
            Method::Pseudo(..) => SolverKind::PseudoInverse,
            Method::Scaled(..) => SolverKind::Prox,
            Method::Inner(..) => SolverKind::InnerFbs,
        }
    }

    /// Solve for `v`; `warm` seeds the inner loop when one is used.
    pub fn solve(&self, v: &Vector, warm: Option<&Vector>) -> Result<Vector> {
        let g = self.gamma;
        let mtv = self.m.apply_t(v);
        match &self.method {
            Method::Cholesky(c, q) => {
                let rhs = Vector::lincomb(g, &mtv, -1.0, q.linear());
                Ok(Vector::from_dvector(&c.solve(&rhs.to_dvector())))
            }
            Method::Pseudo(svd, q) => {
                let rhs = Vector::lincomb(g, &mtv, -1.0, q.linear());
                let sol = svd.solve(&rhs.to_dvector(), 1e-12).map_err(|e| Error::Unsupported(e.to_string()))?;
                Ok(Vector::from_dvector(&sol))
            }
            Method::Scaled(p, s) => p.apply(&mtv.scale(1.0 / s)),
            Method::Inner(p, step) => {
                let mut u = warm.cloned().unwrap_or_else(|| Vector::zeros(self.m.cols()));
                let mut delta = f64::INFINITY;
                for _ in 0..INNER_CAP {
                    let resid = &self.m.apply(&u) - v;
                    let grad = self.m.apply_t(&resid);
                    let next = p.apply(&Vector::lincomb(1.0, &u, -step * g, &grad))?;
                    delta = next.dist(&u);
                    u = next;
                    if delta <= INNER_TOL * u.norm().max(1.0) {
                        return Ok(u);
                    }
                }
                Err(Error::SolverFailure { residual: delta, iterations: INNER_CAP })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(h: &ProxFunction, m: &LinearMap, gamma: f64, v: &Vector, u: &Vector) -> f64 {
        h.eval(u).unwrap() + 0.5 * gamma * m.apply(u).dist_sq(v)
    }

    #[test]
    fn every_method_beats_perturbations() {
        let v = Vector(vec![1.0, -2.0, 0.5]);
        let general = LinearMap::from_rows(&[vec![1.0, 0.5], vec![0.0, 2.0], vec![1.0, -1.0]]).unwrap();
        let ortho = LinearMap::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let cases = [
            (ProxFunction::diagonal_quadratic(vec![1.0, 3.0]).unwrap(), &general, SolverKind::Factorized),
            (ProxFunction::l1(0.7).unwrap(), &ortho, SolverKind::Prox),
            (ProxFunction::l1(0.7).unwrap(), &general, SolverKind::InnerFbs),
        ];
        for (h, m, kind) in cases.iter() {
            let s = SubproblemSolver::new(h, m, 1.3).unwrap();
            assert_eq!(s.kind(), *kind);
            let u = s.solve(&v, None).unwrap();
            let best = objective(h, m, 1.3, &v, &u);
            for d in [[1e-4, 0.0], [0.0, 1e-4], [-1e-4, 1e-4], [-1e-4, 0.0], [0.0, -1e-4]] {
                let p = &u + &Vector(d.to_vec());
                assert!(objective(h, m, 1.3, &v, &p) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn singular_quadratic_uses_pseudo_inverse() {
        let m = LinearMap::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let s = SubproblemSolver::new(&ProxFunction::Zero, &m, 1.0).unwrap();
        assert_eq!(s.kind(), SolverKind::PseudoInverse);
        let u = s.solve(&Vector::scalar(2.0), None).unwrap();
        assert!(u.max_abs_diff(&Vector(vec![1.0, 1.0])) < 1e-12);
    }
}
