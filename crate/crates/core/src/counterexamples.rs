//! Worst-case instances with closed-form iterates: direct sums of planar
//! rotations, the absolute-value and two-line examples, and a diagonal
//! quadratic that slows down the proximal point method.

use std::f64::consts::E;

use crate::error::{invalid, Result};
use crate::linalg::{Subspace, Vector};
use crate::prox::ProxFunction;

/// Direct sum of planes. In block `i`, `U` is the first axis and `V` is the
/// line at angle `theta_i`; DRS on `(iota_V, iota_U)` then acts as
/// `c_i R(theta_i)` with `c_i = cos theta_i`.
///
/// Angles are stored through `gap_i = 1 - c_i` so that `c_i` extremely close
/// to one keeps a nonzero angle.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationSpace {
    gaps: Vec<f64>,
    angles: Vec<f64>,
}

impl RotationSpace {
    pub fn from_cosines(c: &[f64]) -> Result<Self> {
        if c.iter().any(|c| !(*c >= 0.0 && *c < 1.0)) {
            return invalid("cosines must lie in [0, 1)");
        }
        Self::from_gaps(c.iter().map(|c| 1.0 - c).collect())
    }

    /// Blocks given by `1 - c_i` in `(0, 1]`.
    pub fn from_gaps(gaps: Vec<f64>) -> Result<Self> {
        if gaps.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return invalid("1 - c_i must lie in (0, 1]");
        }
        // 1 - cos t = 2 sin^2(t/2)
        let angles = gaps.iter().map(|g| 2.0 * (g / 2.0).sqrt().asin()).collect();
        Ok(RotationSpace { gaps, angles })
    }

    pub fn blocks(&self) -> usize {
        self.gaps.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.gaps.len()
    }

    pub fn cosine(&self, i: usize) -> f64 {
        1.0 - self.gaps[i]
    }

    pub fn gap(&self, i: usize) -> f64 {
        self.gaps[i]
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angles[i]
    }

    /// `c_i^p` computed from the gap.
    pub fn cosine_pow(&self, i: usize, p: f64) -> f64 {
        if p == 0.0 {
            return 1.0;
        }
        (p * (-self.gaps[i]).ln_1p()).exp()
    }

    pub fn u_subspace(&self) -> Subspace {
        Subspace::lines_in_planes(&vec![0.0; self.blocks()])
    }

    pub fn v_subspace(&self) -> Subspace {
        Subspace::lines_in_planes(&self.angles)
    }

    /// `(f, g) = (iota_V, iota_U)`
    pub fn indicator_pair(&self) -> (ProxFunction, ProxFunction) {
        (ProxFunction::indicator_subspace(self.v_subspace()), ProxFunction::indicator_subspace(self.u_subspace()))
    }

    /// `(f, g) = (d_V, iota_U)`
    pub fn distance_pair(&self) -> (ProxFunction, ProxFunction) {
        (ProxFunction::DistanceToSubspace(self.v_subspace()), ProxFunction::indicator_subspace(self.u_subspace()))
    }

    /// `T z = (c_i R(theta_i) z_i)_i`, the DRS operator of the indicator pair.
    pub fn apply(&self, z: &Vector) -> Vector {
        let mut out = Vector::zeros(z.dim());
        for i in 0..self.blocks() {
            let c = self.cosine(i);
            let (s, cs) = self.angles[i].sin_cos();
            let (a, b) = (z[2 * i], z[2 * i + 1]);
            out[2 * i] = c * (cs * a - s * b);
            out[2 * i + 1] = c * (s * a + cs * b);
        }
        out
    }

    /// `||T^k z0||^2 = sum_i c_i^{2k} ||z0_i||^2`
    pub fn norm_sq_after(&self, z0: &Vector, k: usize) -> f64 {
        (0..self.blocks())
            .map(|i| self.cosine_pow(i, 2.0 * k as f64) * (z0[2 * i].powi(2) + z0[2 * i + 1].powi(2)))
            .sum()
    }
}

/// The DRS operator of `RotationSpace` as a standalone map.
pub fn build_rotation_operator(space: &RotationSpace) -> impl Fn(&Vector) -> Result<Vector> + '_ {
    move |z: &Vector| {
        if z.dim() != space.dim() {
            return invalid("dimension mismatch");
        }
        Ok(space.apply(z))
    }
}

/// Instance on which the DRS fixed-point residual decays no faster than `(k+1)^(-2 alpha)`.
#[derive(Clone, Debug)]
pub struct OptimalFprSetup {
    pub alpha: f64,
    pub space: RotationSpace,
    pub z0: Vector,
}

/// `c_i = sqrt(i/(i+1))` and `z0_i = sqrt(2 alpha e) ((i+1)^(-alpha), 0)`.
pub fn optimal_fpr_setup(alpha: f64, n_blocks: usize) -> Result<OptimalFprSetup> {
    if !(alpha > 0.5) || n_blocks == 0 {
        return invalid("need alpha > 1/2 and at least one block");
    }
    let space = RotationSpace::from_gaps(sqrt_ratio_gaps(n_blocks))?;
    let amp = (2.0 * alpha * E).sqrt();
    let mut z0 = Vector::zeros(2 * n_blocks);
    for i in 0..n_blocks {
        z0[2 * i] = amp * ((i + 1) as f64).powf(-alpha);
    }
    Ok(OptimalFprSetup { alpha, space, z0 })
}

// 1 - sqrt(i/(i+1)) = (1/(i+1)) / (1 + sqrt(i/(i+1)))
fn sqrt_ratio_gaps(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let c = (i as f64 / (i + 1) as f64).sqrt();
            (1.0 / (i + 1) as f64) / (1.0 + c)
        })
        .collect()
}

impl OptimalFprSetup {
    /// Exact `||T z^k - z^k||^2 = sum_i c_i^{2k} 2 alpha e (i+1)^(-(1+2 alpha))`.
    pub fn fpr_oracle(&self, k: usize) -> f64 {
        let a = self.alpha;
        (0..self.space.blocks())
            .map(|i| self.space.cosine_pow(i, 2.0 * k as f64) * 2.0 * a * E * ((i + 1) as f64).powf(-(1.0 + 2.0 * a)))
            .sum()
    }

    /// `(k+1)^(-2 alpha)`, the lower bound on the untruncated space.
    pub fn fpr_lower_bound(&self, k: usize) -> f64 {
        ((k + 1) as f64).powf(-2.0 * self.alpha)
    }

    /// Lower bound after truncating to the stored blocks:
    /// `(k+1)^(-2 alpha) - (N+1)^(-2 alpha)`.
    pub fn truncated_lower_bound(&self, k: usize) -> f64 {
        let n = self.space.blocks() as f64;
        self.fpr_lower_bound(k) - (n + 1.0).powf(-2.0 * self.alpha)
    }
}

/// Instance on which DRS converges slower than a prescribed `h`.
#[derive(Clone, Debug)]
pub struct SlowSequenceSpec {
    pub space: RotationSpace,
    pub z0: Vector,
    /// Witness blocks `n_k` with `n_k + 1 = floor(1/h(k+1))`, for `k = 0..=horizon`.
    pub witnesses: Vec<usize>,
    /// `h(k)` for `k = 0..=horizon`.
    pub h_values: Vec<f64>,
}

/// Solve `1/h(y) - 1 = x` for `y >= 0` by bisection to relative accuracy `1e-12`.
pub fn inverse_of_reciprocal_minus_one(h: &dyn Fn(f64) -> f64, x: f64) -> Result<f64> {
    let phi = |y: f64| 1.0 / h(y) - 1.0;
    if phi(0.0) > x {
        return invalid(format!("{x} is below the range of 1/h - 1"));
    }
    let mut hi = 1.0;
    let mut expansions = 0;
    while phi(hi) < x {
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 || !hi.is_finite() {
            return invalid("1/h - 1 does not reach the target");
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `c_k = h2(k+1)/(1 + h2(k+1))` with `h2` the inverse of `1/h - 1`, and
/// `z0_k = (1/(k+1), 0)`. Requires `h` strictly decreasing with `h(0) >= 1/2`.
pub fn arbitrarily_slow_setup(h: &dyn Fn(f64) -> f64, n_blocks: usize, horizon: usize) -> Result<SlowSequenceSpec> {
    if !(h(0.0) >= 0.5) || !(h(0.0) < 1.0) {
        return invalid("need 1/2 <= h(0) < 1");
    }
    let h_values: Vec<f64> = (0..=horizon).map(|k| h(k as f64)).collect();
    if h_values.windows(2).any(|w| !(w[1] < w[0])) || h_values.iter().any(|v| !(*v > 0.0)) {
        return invalid("h must be positive and strictly decreasing");
    }
    let witnesses: Vec<usize> = (0..=horizon).map(|k| ((1.0 / h((k + 1) as f64)).floor() as usize).saturating_sub(1)).collect();
    let needed = witnesses.iter().copied().max().unwrap_or(0) + 1;
    if n_blocks < needed {
        return invalid(format!("{n_blocks} blocks do not cover witness index {}", needed - 1));
    }
    let mut gaps = Vec::with_capacity(n_blocks);
    for k in 0..n_blocks {
        let y = inverse_of_reciprocal_minus_one(h, (k + 1) as f64)?;
        gaps.push(1.0 / (1.0 + y));
    }
    let space = RotationSpace::from_gaps(gaps)?;
    let mut z0 = Vector::zeros(2 * n_blocks);
    for k in 0..n_blocks {
        z0[2 * k] = 1.0 / (k + 1) as f64;
    }
    Ok(SlowSequenceSpec { space, z0, witnesses, h_values })
}

impl SlowSequenceSpec {
    /// `c_{n_k}^{k+1} / (n_k + 1)` and `h(k+1)/e` for the witness at `k`.
    pub fn witness_pair(&self, h: &dyn Fn(f64) -> f64, k: usize) -> (f64, f64) {
        let n = self.witnesses[k];
        (self.space.cosine_pow(n, (k + 1) as f64) / (n + 1) as f64, h((k + 1) as f64) / E)
    }

    /// `||z^k|| >= h(k)/e`
    pub fn norm_lower_bound(&self, k: usize) -> f64 {
        self.h_values[k] / E
    }
}

/// Distance-function instance: `f = d_V`, `g = iota_U` on the rotation
/// space of `optimal_fpr_setup`, `z0_j = ((j+1)^(-alpha), 0)`, `gamma = ||z0||`.
#[derive(Clone, Debug)]
pub struct DistanceLowerSetup {
    pub alpha: f64,
    pub space: RotationSpace,
    pub z0: Vector,
    pub gamma: f64,
}

pub fn distance_lower_setup(alpha: f64, n_blocks: usize) -> Result<DistanceLowerSetup> {
    if !(alpha > 0.5) || n_blocks == 0 {
        return invalid("need alpha > 1/2 and at least one block");
    }
    let space = RotationSpace::from_gaps(sqrt_ratio_gaps(n_blocks))?;
    let mut z0 = Vector::zeros(2 * n_blocks);
    for i in 0..n_blocks {
        z0[2 * i] = ((i + 1) as f64).powf(-alpha);
    }
    let gamma = z0.norm();
    Ok(DistanceLowerSetup { alpha, space, z0, gamma })
}

impl DistanceLowerSetup {
    /// `d_V(x_g^k)^2 = sum_i c_i^{2k} cos^2(k theta_i) (i+1)^(-(2 alpha + 1))`
    pub fn distance_sq_oracle(&self, k: usize) -> f64 {
        (0..self.space.blocks())
            .map(|i| {
                let c = (k as f64 * self.space.angle(i)).cos();
                self.space.cosine_pow(i, 2.0 * k as f64) * c * c * ((i + 1) as f64).powf(-(2.0 * self.alpha + 1.0))
            })
            .sum()
    }
}

/// Closed-form PRS iterates (`lambda = 1`) for `f = |x|`, `g = 0`, `gamma = 1`, `z0 = 2 - eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsExample {
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarIterate {
    pub z: f64,
    pub x_g: f64,
    pub x_f: f64,
    pub xbar_g: f64,
    pub xbar_f: f64,
}

impl AbsExample {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid("eps must lie in (0, 1)");
        }
        Ok(AbsExample { eps })
    }

    pub fn functions(&self) -> (ProxFunction, ProxFunction) {
        (ProxFunction::l1(1.0).expect("unit scale"), ProxFunction::Zero)
    }

    pub fn z0(&self) -> f64 {
        2.0 - self.eps
    }

    pub fn oracle(&self, k: usize) -> ScalarIterate {
        let e = self.eps;
        let kp = (k + 1) as f64;
        let even = k.is_multiple_of(2);
        let (z, x_g, x_f) = if k == 0 {
            (2.0 - e, 2.0 - e, 1.0 - e)
        } else {
            let s = if even { e } else { -e };
            (s, s, 0.0)
        };
        ScalarIterate {
            z,
            x_g,
            x_f,
            xbar_g: if even { 2.0 - e } else { 2.0 - 2.0 * e } / kp,
            xbar_f: (1.0 - e) / kp,
        }
    }

    /// Ergodic upper bound `|z0 - x*|^2 / (4 (k+1))` with `x* = 0`.
    pub fn ergodic_upper(&self, k: usize) -> f64 {
        self.z0().powi(2) / (4.0 * (k + 1) as f64)
    }

    /// Lipschitz ergodic bound `(5 - 3 eps + eps^2/4)/(k+1)`, using `z* = 0`, `L = 1`.
    pub fn lipschitz_upper(&self, k: usize) -> f64 {
        let e = self.eps;
        (5.0 - 3.0 * e + e * e / 4.0) / (k + 1) as f64
    }

    /// `2 |z0 - z*| / (k+1) = (4 - 2 eps)/(k+1)`
    pub fn feasibility_upper(&self, k: usize) -> f64 {
        (4.0 - 2.0 * self.eps) / (k + 1) as f64
    }
}

/// Closed-form PRS iterates (`lambda = 1`) for `f = iota_{x1 = 0}`, `g = iota_{x2 = 0}`, `z0 = (1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SquareExample;

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarIterate {
    pub z: Vector,
    pub x_g: Vector,
    pub x_f: Vector,
    pub xbar_g: Vector,
    pub xbar_f: Vector,
}

impl SquareExample {
    pub fn functions(&self) -> (ProxFunction, ProxFunction) {
        let f = ProxFunction::indicator_subspace(Subspace::coordinate(2, &[1]).expect("axis"));
        let g = ProxFunction::indicator_subspace(Subspace::coordinate(2, &[0]).expect("axis"));
        (f, g)
    }

    pub fn z0(&self) -> Vector {
        Vector(vec![1.0, 1.0])
    }

    pub fn oracle(&self, k: usize) -> PlanarIterate {
        let kp = (k + 1) as f64;
        if k.is_multiple_of(2) {
            PlanarIterate {
                z: Vector(vec![1.0, 1.0]),
                x_g: Vector(vec![1.0, 0.0]),
                x_f: Vector(vec![0.0, -1.0]),
                xbar_g: Vector(vec![1.0 / kp, 0.0]),
                xbar_f: Vector(vec![0.0, -1.0 / kp]),
            }
        } else {
            PlanarIterate {
                z: Vector(vec![-1.0, -1.0]),
                x_g: Vector(vec![-1.0, 0.0]),
                x_f: Vector(vec![0.0, 1.0]),
                xbar_g: Vector::zeros(2),
                xbar_f: Vector::zeros(2),
            }
        }
    }

    /// `||z0 - z*||` with `z* = 0`.
    pub fn dist0(&self) -> f64 {
        2f64.sqrt()
    }
}

/// Proximal point lower-bound instance: `f = 1/2 sum_j z_j^2 / j` (`j >= 1`)
/// and `z0_j = (j + gamma)^(-alpha)`.
#[derive(Clone, Debug)]
pub struct PpaDiagSetup {
    pub alpha: f64,
    pub gamma: f64,
    pub f: ProxFunction,
    pub z0: Vector,
}

/// Truncation is accepted once the dropped tail costs at most 1% of the bounds at `horizon`.
pub fn ppa_diag_setup(alpha: f64, gamma: f64, n: usize, horizon: usize) -> Result<PpaDiagSetup> {
    if !(alpha > 0.0) || !(gamma > 0.0) {
        return invalid("need alpha > 0 and gamma > 0");
    }
    let nn = n as f64;
    let kk = horizon as f64;
    let fpr_tail = ((kk + gamma) / (nn + gamma)).powf(1.0 + 2.0 * alpha);
    let obj_tail = ((kk + 1.0 + gamma) / (nn + gamma)).powf(2.0 * alpha);
    if fpr_tail > 0.01 || obj_tail > 0.01 {
        return Err(crate::Error::InvalidConfig(format!("{n} coordinates too few for horizon {horizon}")));
    }
    let weights = (1..=n).map(|j| 1.0 / j as f64).collect();
    let z0 = Vector((1..=n).map(|j| (j as f64 + gamma).powf(-alpha)).collect());
    Ok(PpaDiagSetup { alpha, gamma, f: ProxFunction::diagonal_quadratic(weights)?, z0 })
}

impl PpaDiagSetup {
    /// `gamma^2 / ((1 + 2 alpha) e^{2 gamma} (k + gamma)^{1 + 2 alpha})`
    pub fn fpr_lower(&self, k: usize) -> f64 {
        let (a, g) = (self.alpha, self.gamma);
        g * g / ((1.0 + 2.0 * a) * (2.0 * g).exp() * (k as f64 + g).powf(1.0 + 2.0 * a))
    }

    /// Lower bound on `f(z^{k+1})`: `1 / (4 alpha e^{2 gamma} (k + 1 + gamma)^{2 alpha})`.
    pub fn objective_lower(&self, k: usize) -> f64 {
        let (a, g) = (self.alpha, self.gamma);
        1.0 / (4.0 * a * (2.0 * g).exp() * ((k + 1) as f64 + g).powf(2.0 * a))
    }

    /// Exact `||prox(z^k) - z^k||^2`.
    pub fn fpr_oracle(&self, k: usize) -> f64 {
        let g = self.gamma;
        self.z0
            .0
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let j = (i + 1) as f64;
                (g / (j + g)).powi(2) * (j / (j + g)).powf(2.0 * k as f64) * z * z
            })
            .sum()
    }

    /// Exact `f(z^k)`.
    pub fn objective_oracle(&self, k: usize) -> f64 {
        let g = self.gamma;
        self.z0
            .0
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let j = (i + 1) as f64;
                0.5 / j * (j / (j + g)).powf(2.0 * k as f64) * z * z
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_operator_matches_drs() {
        let space = RotationSpace::from_cosines(&[0.0, 0.3, 0.9]).unwrap();
        let (f, g) = space.indicator_pair();
        let z = Vector(vec![0.4, -1.0, 2.0, 0.5, -0.7, 1.1]);
        let drs = {
            let t = f.refl(1.0, &g.refl(1.0, &z).unwrap()).unwrap();
            Vector::lincomb(0.5, &z, 0.5, &t)
        };
        assert!(space.apply(&z).max_abs_diff(&drs) < 1e-14);
    }

    #[test]
    fn block_identity_for_one_minus_cos_rotation() {
        // I - cos t R(t) = [[sin^2, sc], [-sc, sin^2]]
        let t = 0.7f64;
        let space = RotationSpace::from_cosines(&[t.cos()]).unwrap();
        let (s, c) = t.sin_cos();
        let e1 = space.apply(&Vector(vec![1.0, 0.0]));
        assert!((1.0 - e1[0] - s * s).abs() < 1e-14);
        assert!((-e1[1] + s * c).abs() < 1e-14);
    }

    #[test]
    fn optimal_fpr_initial_residual_blocks() {
        let s = optimal_fpr_setup(0.75, 50).unwrap();
        let w = &s.z0 - &s.space.apply(&s.z0);
        for j in 0..50 {
            let n = (w[2 * j].powi(2) + w[2 * j + 1].powi(2)).sqrt();
            let want = (2.0 * 0.75 * E).sqrt() * ((j + 1) as f64).powf(-(1.0 + 1.5) / 2.0);
            assert!((n - want).abs() < 1e-13);
        }
        let (a, b) = (s.fpr_oracle(0), w.norm_sq());
        assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
    }

    #[test]
    fn bisection_inverse() {
        let h = |t: f64| (t + 2.0).powf(-0.05);
        // closed form: (1 + x)^20 - 2
        let y = inverse_of_reciprocal_minus_one(&h, 1.0).unwrap();
        let want = 2f64.powi(20) - 2.0;
        assert!((y - want).abs() < 1e-9 * want);
    }

    #[test]
    fn abs_oracle_start() {
        let ex = AbsExample::new(0.1).unwrap();
        let o = ex.oracle(0);
        assert_eq!((o.z, o.x_g, o.x_f), (1.9, 1.9, 0.9));
        let o = ex.oracle(3);
        assert_eq!((o.z, o.x_g, o.x_f), (-0.1, -0.1, 0.0));
    }

    #[test]
    fn ppa_setup_rejects_short_truncation() {
        assert!(ppa_diag_setup(1.0, 1.0, 1000, 300).is_err());
        assert!(ppa_diag_setup(1.0, 1.0, 100_000, 300).is_ok());
    }
}
