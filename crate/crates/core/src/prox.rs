//! Closed proper convex functions with proximal maps, reflections and the
//! triangle iterate used by the splitting drivers.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{invalid, Error, Result};
use crate::linalg::{ConvexSet, LinearMap, Subspace, Vector};

/// Indicator functions report `+inf` once a point is farther than this from the set.
pub const INDICATOR_TOL: f64 = 1e-9;

pub type EvalFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;

/// User-supplied function. Either callback may be missing; operations that
/// need a missing one fail with `Error::Unsupported`.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub eval: Option<EvalFn>,
    pub prox: Option<ProxFn>,
    /// Bound on the error of `prox` in norm.
    pub accuracy: f64,
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFunction")
            .field("name", &self.name)
            .field("eval", &self.eval.is_some())
            .field("prox", &self.prox.is_some())
            .field("accuracy", &self.accuracy)
            .finish()
    }
}

/// `x -> 1/2 x^T Q x + q^T x + c` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    q_mat: DMatrix<f64>,
    lin: Vector,
    constant: f64,
    max_eig: f64,
}

impl QuadraticForm {
    pub fn new(q_mat: DMatrix<f64>, lin: Vector, constant: f64) -> Result<Self> {
        let n = q_mat.nrows();
        if q_mat.ncols() != n || lin.dim() != n {
            return invalid("quadratic: Q must be square and match q");
        }
        let asym = (&q_mat - q_mat.transpose()).abs().max();
        let scale = 1.0 + q_mat.abs().max();
        if asym > 1e-10 * scale {
            return invalid("quadratic: Q is not symmetric");
        }
        let eig = q_mat.clone().symmetric_eigen().eigenvalues;
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if n > 0 && min < -1e-10 * scale {
            return invalid("quadratic: Q is not positive semidefinite");
        }
        let max_eig = eig.iter().copied().fold(0.0, f64::max);
        Ok(QuadraticForm { q_mat, lin, constant, max_eig })
    }

    /// `1/2 ||M x - b||^2`
    pub fn least_squares(m: &LinearMap, b: &Vector) -> Result<Self> {
        let mt = m.matrix().transpose();
        let q = &mt * m.matrix();
        let lin = Vector::from_dvector(&(-(&mt * b.to_dvector())));
        Self::new(q, lin, 0.5 * b.norm_sq())
    }

    pub fn dim(&self) -> usize {
        self.lin.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q_mat
    }

    pub fn linear(&self) -> &Vector {
        &self.lin
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let qx = &self.q_mat * x.to_dvector();
        0.5 * qx.iter().zip(&x.0).map(|(a, b)| a * b).sum::<f64>() + self.lin.dot(x) + self.constant
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &Vector::from_dvector(&(&self.q_mat * x.to_dvector())) + &self.lin
    }

    /// `u -> self(M u - b)`, again a quadratic.
    pub fn compose_affine(&self, m: &LinearMap, b: &Vector) -> Result<Self> {
        if m.rows() != self.dim() || b.dim() != self.dim() {
            return invalid("compose_affine: shape mismatch");
        }
        let mt = m.matrix().transpose();
        let qm = &self.q_mat * m.matrix();
        let q = &mt * &qm;
        let qb = &self.q_mat * b.to_dvector();
        let lin = &mt * (self.lin.to_dvector() - &qb);
        let c = 0.5 * b.to_dvector().dot(&qb) - self.lin.dot(b) + self.constant;
        let q = (&q + q.transpose()) * 0.5;
        Self::new(q, Vector::from_dvector(&lin), c)
    }
}

/// Closed proper convex function with a computable proximal map.
#[derive(Clone, Debug)]
pub enum ProxFunction {
    Zero,
    /// `scale * ||x - center||_1`; a missing center means the origin.
    L1Norm { scale: f64, center: Option<Vector> },
    Indicator(ConvexSet),
    Quadratic(QuadraticForm),
    DistanceToSubspace(Subspace),
    /// `1/2 sum_j w_j x_j^2`
    DiagonalQuadratic(Vec<f64>),
    /// Sum of functions acting on consecutive coordinate blocks.
    BlockSeparable { blocks: Vec<ProxFunction>, sizes: Vec<usize> },
    Custom(CustomFunction),
}

impl ProxFunction {
    pub fn l1(scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return invalid("L1 scale must be finite and nonnegative");
        }
        Ok(ProxFunction::L1Norm { scale, center: None })
    }

    pub fn l1_centered(scale: f64, center: Vector) -> Result<Self> {
        let mut f = Self::l1(scale)?;
        if let ProxFunction::L1Norm { center: c, .. } = &mut f {
            *c = Some(center);
        }
        Ok(f)
    }

    pub fn indicator_subspace(s: Subspace) -> Self {
        ProxFunction::Indicator(ConvexSet::Subspace(s))
    }

    pub fn indicator_affine(s: Subspace, offset: Vector) -> Result<Self> {
        Ok(ProxFunction::Indicator(ConvexSet::affine(s, offset)?))
    }

    pub fn quadratic(q_mat: DMatrix<f64>, lin: Vector, constant: f64) -> Result<Self> {
        Ok(ProxFunction::Quadratic(QuadraticForm::new(q_mat, lin, constant)?))
    }

    pub fn diagonal_quadratic(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return invalid("diagonal weights must be finite and nonnegative");
        }
        Ok(ProxFunction::DiagonalQuadratic(weights))
    }

    pub fn block_separable(blocks: Vec<ProxFunction>, sizes: Vec<usize>) -> Result<Self> {
        if blocks.len() != sizes.len() {
            return invalid("one size per block required");
        }
        Ok(ProxFunction::BlockSeparable { blocks, sizes })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxFunction::Zero => "zero",
            ProxFunction::L1Norm { .. } => "l1",
            ProxFunction::Indicator(_) => "indicator",
            ProxFunction::Quadratic(_) => "quadratic",
            ProxFunction::DistanceToSubspace(_) => "distance",
            ProxFunction::DiagonalQuadratic(_) => "diagonal_quadratic",
            ProxFunction::BlockSeparable { .. } => "block_separable",
            ProxFunction::Custom(_) => "custom",
        }
    }

    /// Function value; `+inf` outside the domain.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        Ok(match self {
            ProxFunction::Zero => 0.0,
            ProxFunction::L1Norm { scale, center } => {
                let s: f64 = match center {
                    Some(c) => x.0.iter().zip(&c.0).map(|(a, b)| (a - b).abs()).sum(),
                    None => x.0.iter().map(|a| a.abs()).sum(),
                };
                scale * s
            }
            ProxFunction::Indicator(set) => {
                if set.distance(x) > INDICATOR_TOL {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ProxFunction::Quadratic(q) => q.eval(x),
            ProxFunction::DistanceToSubspace(s) => s.distance(x),
            ProxFunction::DiagonalQuadratic(w) => {
                0.5 * w.iter().zip(&x.0).map(|(w, v)| w * v * v).sum::<f64>()
            }
            ProxFunction::BlockSeparable { blocks, sizes } => {
                let mut total = 0.0;
                for (b, xb) in blocks.iter().zip(x.split(sizes)) {
                    total += b.eval(&xb)?;
                }
                total
            }
            ProxFunction::Custom(c) => match &c.eval {
                Some(e) => e(x),
                None => return Err(Error::Unsupported(format!("custom function {} has no eval", c.name))),
            },
        })
    }

    pub fn can_eval(&self) -> bool {
        match self {
            ProxFunction::Custom(c) => c.eval.is_some(),
            ProxFunction::BlockSeparable { blocks, .. } => blocks.iter().all(|b| b.can_eval()),
            _ => true,
        }
    }

    /// `beta` such that the gradient is `1/beta`-Lipschitz; `None` if not smooth.
    /// Affine functions report `+inf`.
    pub fn beta(&self) -> Option<f64> {
        match self {
            ProxFunction::Zero => Some(f64::INFINITY),
            ProxFunction::Quadratic(q) => Some(if q.max_eig > 0.0 { 1.0 / q.max_eig } else { f64::INFINITY }),
            ProxFunction::DiagonalQuadratic(w) => {
                let m = w.iter().copied().fold(0.0, f64::max);
                Some(if m > 0.0 { 1.0 / m } else { f64::INFINITY })
            }
            ProxFunction::BlockSeparable { blocks, .. } => {
                blocks.iter().map(|b| b.beta()).try_fold(f64::INFINITY, |acc, b| b.map(|b| acc.min(b)))
            }
            _ => None,
        }
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        match self {
            ProxFunction::Zero => Ok(Vector::zeros(x.dim())),
            ProxFunction::Quadratic(q) => Ok(q.gradient(x)),
            ProxFunction::DiagonalQuadratic(w) => Ok(Vector(w.iter().zip(&x.0).map(|(w, v)| w * v).collect())),
            ProxFunction::BlockSeparable { blocks, sizes } => {
                let parts: Result<Vec<Vector>> =
                    blocks.iter().zip(x.split(sizes)).map(|(b, xb)| b.gradient(&xb)).collect();
                Ok(Vector::concat(&parts?))
            }
            other => Err(Error::Unsupported(format!("{} is not differentiable", other.kind_name()))),
        }
    }

    /// Lipschitz modulus on `R^dim`, where one is known analytically.
    pub fn lipschitz(&self, dim: usize) -> Option<f64> {
        match self {
            ProxFunction::Zero => Some(0.0),
            ProxFunction::L1Norm { scale, .. } => Some(scale * (dim as f64).sqrt()),
            ProxFunction::DistanceToSubspace(_) => Some(1.0),
            _ => None,
        }
    }

    /// Dense quadratic representation on `R^dim` when the function is one.
    pub fn as_quadratic(&self, dim: usize) -> Option<QuadraticForm> {
        match self {
            ProxFunction::Zero => QuadraticForm::new(DMatrix::zeros(dim, dim), Vector::zeros(dim), 0.0).ok(),
            ProxFunction::Quadratic(q) if q.dim() == dim => Some(q.clone()),
            ProxFunction::DiagonalQuadratic(w) if w.len() == dim => {
                QuadraticForm::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(w)), Vector::zeros(dim), 0.0)
                    .ok()
            }
            ProxFunction::BlockSeparable { blocks, sizes } if sizes.iter().sum::<usize>() == dim => {
                let mut q = DMatrix::zeros(dim, dim);
                let mut lin = Vector::zeros(dim);
                let mut c = 0.0;
                let mut at = 0;
                for (b, &s) in blocks.iter().zip(sizes) {
                    let bq = b.as_quadratic(s)?;
                    q.view_mut((at, at), (s, s)).copy_from(bq.matrix());
                    for i in 0..s {
                        lin[at + i] = bq.linear()[i];
                    }
                    c += bq.constant();
                    at += s;
                }
                QuadraticForm::new(q, lin, c).ok()
            }
            _ => None,
        }
    }

    /// Bind a step size, caching any factorization the prox needs.
    pub fn prepare(&self, gamma: f64) -> Result<PreparedProx<'_>> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return invalid("step size must be positive and finite");
        }
        let inner = match self {
            ProxFunction::Quadratic(q) => {
                let n = q.dim();
                let m = DMatrix::<f64>::identity(n, n) + q.matrix() * gamma;
                let chol = Cholesky::new(m).ok_or_else(|| Error::InvalidArgument("I + gamma Q not positive definite".into()))?;
                Prepared::Chol(chol)
            }
            ProxFunction::BlockSeparable { blocks, .. } => {
                Prepared::Blocks(blocks.iter().map(|b| b.prepare(gamma)).collect::<Result<_>>()?)
            }
            ProxFunction::Custom(c) if c.prox.is_none() => {
                return Err(Error::Unsupported(format!("custom function {} has no prox", c.name)))
            }
            _ => Prepared::None,
        };
        Ok(PreparedProx { f: self, gamma, inner })
    }

    /// `prox_{gamma f}(x)`
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.prepare(gamma)?.apply(x)
    }

    /// `2 prox_{gamma f}(x) - x`
    pub fn refl(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let p = self.prox(gamma, x)?;
        Ok(Vector::lincomb(2.0, &p, -1.0, x))
    }
}

enum Prepared<'a> {
    None,
    Chol(Cholesky<f64, Dyn>),
    Blocks(Vec<PreparedProx<'a>>),
}

/// A prox bound to a fixed step size.
pub struct PreparedProx<'a> {
    f: &'a ProxFunction,
    gamma: f64,
    inner: Prepared<'a>,
}

impl PreparedProx<'_> {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn function(&self) -> &ProxFunction {
        self.f
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let g = self.gamma;
        let out = match (self.f, &self.inner) {
            (ProxFunction::Zero, _) => x.clone(),
            (ProxFunction::L1Norm { scale, center }, _) => {
                let t = g * scale;
                let soft = |v: f64| v.signum() * (v.abs() - t).max(0.0);
                match center {
                    Some(c) => Vector(x.0.iter().zip(&c.0).map(|(v, c)| c + soft(v - c)).collect()),
                    None => Vector(x.0.iter().map(|&v| soft(v)).collect()),
                }
            }
            (ProxFunction::Indicator(set), _) => set.project(x),
            (ProxFunction::Quadratic(q), Prepared::Chol(chol)) => {
                let rhs = Vector::lincomb(1.0, x, -g, q.linear());
                Vector::from_dvector(&chol.solve(&rhs.to_dvector()))
            }
            (ProxFunction::DistanceToSubspace(s), _) => {
                let p = s.project(x);
                let d = x.dist(&p);
                let theta = if g <= d { g / d } else { 1.0 };
                Vector::lincomb(theta, &p, 1.0 - theta, x)
            }
            (ProxFunction::DiagonalQuadratic(w), _) => {
                Vector(x.0.iter().zip(w).map(|(v, w)| v / (1.0 + g * w)).collect())
            }
            (ProxFunction::BlockSeparable { sizes, .. }, Prepared::Blocks(ps)) => {
                let parts: Result<Vec<Vector>> = ps.iter().zip(x.split(sizes)).map(|(p, xb)| p.apply(&xb)).collect();
                Vector::concat(&parts?)
            }
            (ProxFunction::Custom(c), _) => match &c.prox {
                Some(p) => p(g, x),
                None => return Err(Error::Unsupported(format!("custom function {} has no prox", c.name))),
            },
            _ => unreachable!("prepare covers every kind"),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        Ok(out)
    }
}

/// Points and subgradients produced from one PRS iterate `z`:
/// `x_g = prox_g(z)`, `x_f = prox_f(2 x_g - z)`,
/// `grad_g = (z - x_g)/gamma` and `grad_f = (2 x_g - z - x_f)/gamma`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleIterate {
    pub x_g: Vector,
    pub x_f: Vector,
    pub grad_g: Vector,
    pub grad_f: Vector,
}

impl TriangleIterate {
    pub fn compute(f: &PreparedProx<'_>, g: &PreparedProx<'_>, z: &Vector) -> Result<Self> {
        let gamma = g.gamma();
        let x_g = g.apply(z)?;
        let refl_g = Vector::lincomb(2.0, &x_g, -1.0, z);
        let x_f = f.apply(&refl_g)?;
        let grad_g = (z - &x_g).scale(1.0 / gamma);
        let grad_f = (&refl_g - &x_f).scale(1.0 / gamma);
        Ok(TriangleIterate { x_g, x_f, grad_g, grad_f })
    }

    /// `T_PRS z = refl_f(refl_g z) = z + 2 (x_f - x_g)`
    pub fn prs_image(&self, z: &Vector) -> Vector {
        let mut out = z.clone();
        out.axpy(2.0, &self.x_f);
        out.axpy(-2.0, &self.x_g);
        out
    }
}

/// Largest violation of `||Px - Py||^2 <= <Px - Py, x - y>` over the sample pairs.
pub fn firm_nonexpansive_violation(f: &ProxFunction, gamma: f64, pairs: &[(Vector, Vector)]) -> Result<f64> {
    let p = f.prepare(gamma)?;
    let mut worst = f64::NEG_INFINITY;
    for (x, y) in pairs {
        let d = &p.apply(x)? - &p.apply(y)?;
        worst = worst.max(d.norm_sq() - d.dot(&(x - y)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_soft_threshold() {
        let f = ProxFunction::l1(1.0).unwrap();
        let p = f.prox(1.0, &Vector(vec![3.0, -0.5])).unwrap();
        assert_eq!(p, Vector(vec![2.0, 0.0]));
    }

    #[test]
    fn l1_centered() {
        let f = ProxFunction::l1_centered(1.0, Vector::scalar(1.0)).unwrap();
        assert_eq!(f.prox(1.0, &Vector::scalar(5.0)).unwrap(), Vector::scalar(4.0));
        assert_eq!(f.prox(1.0, &Vector::scalar(0.0)).unwrap(), Vector::scalar(1.0));
    }

    #[test]
    fn diagonal_quadratic_prox() {
        let f = ProxFunction::diagonal_quadratic(vec![1.0, 0.5]).unwrap();
        let p = f.prox(1.0, &Vector(vec![1.0, 1.0])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_prox_matches_closed_form() {
        // f = 1/2 (x - 3)^2, prox_{gamma f}(x) = (x + 3 gamma)/(1 + gamma)
        let f = ProxFunction::quadratic(DMatrix::from_element(1, 1, 1.0), Vector::scalar(-3.0), 4.5).unwrap();
        let p = f.prox(0.5, &Vector::scalar(1.0)).unwrap();
        assert!((p[0] - 2.5 / 1.5).abs() < 1e-14);
        assert_eq!(f.eval(&Vector::scalar(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn distance_prox_regimes() {
        let s = Subspace::coordinate(2, &[0]).unwrap();
        let f = ProxFunction::DistanceToSubspace(s);
        // far away: move gamma toward the set
        let p = f.prox(1.0, &Vector(vec![2.0, 4.0])).unwrap();
        assert!(p.max_abs_diff(&Vector(vec![2.0, 3.0])) < 1e-15);
        // close: land on the set
        let p = f.prox(1.0, &Vector(vec![2.0, 0.5])).unwrap();
        assert!(p.max_abs_diff(&Vector(vec![2.0, 0.0])) < 1e-15);
    }

    #[test]
    fn indicator_eval_token() {
        let f = ProxFunction::indicator_subspace(Subspace::coordinate(2, &[0]).unwrap());
        assert_eq!(f.eval(&Vector(vec![1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(f.eval(&Vector(vec![1.0, 1e-6])).unwrap(), f64::INFINITY);
    }

    #[test]
    fn custom_without_prox_is_unsupported() {
        let f = ProxFunction::Custom(CustomFunction { name: "h".into(), eval: None, prox: None, accuracy: 0.0 });
        assert!(matches!(f.prox(1.0, &Vector::scalar(0.0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bad_step_rejected() {
        assert!(ProxFunction::Zero.prox(0.0, &Vector::scalar(1.0)).is_err());
        assert!(ProxFunction::Zero.prox(-1.0, &Vector::scalar(1.0)).is_err());
    }

    #[test]
    fn triangle_identity() {
        let f = ProxFunction::l1(0.7).unwrap();
        let g = ProxFunction::quadratic(DMatrix::identity(2, 2) * 2.0, Vector(vec![1.0, -1.0]), 0.0).unwrap();
        let (pf, pg) = (f.prepare(0.8).unwrap(), g.prepare(0.8).unwrap());
        let z = Vector(vec![1.3, -2.1]);
        let t = TriangleIterate::compute(&pf, &pg, &z).unwrap();
        let lhs = t.prs_image(&z);
        let via_refl = f.refl(0.8, &g.refl(0.8, &z).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&via_refl) < 1e-14);
        // z+ - z = -2 lambda gamma (grad_f + grad_g) with lambda = 1
        let rhs = (&t.grad_f + &t.grad_g).scale(-2.0 * 0.8);
        assert!((&lhs - &z).max_abs_diff(&rhs) < 1e-14);
    }

    #[test]
    fn compose_affine_quadratic() {
        let l = QuadraticForm::new(DMatrix::identity(2, 2), Vector::zeros(2), 0.0).unwrap();
        let m = LinearMap::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let b = Vector(vec![1.0, -1.0]);
        let c = l.compose_affine(&m, &b).unwrap();
        let x = Vector(vec![0.3, 0.9]);
        let r = &m.apply(&x) - &b;
        assert!((c.eval(&x) - 0.5 * r.norm_sq()).abs() < 1e-14);
    }
}
