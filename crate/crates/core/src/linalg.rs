//! Dense vectors, linear maps, subspaces with orthonormal bases, and
//! simple closed convex sets with exact projections.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance used by Gram-Schmidt to declare a basis vector dependent.
pub const GRAM_SCHMIDT_TOL: f64 = 1e-12;

/// Dense real vector.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        Vector(xs.to_vec())
    }

    pub fn scalar(x: f64) -> Self {
        Vector(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|a| s * a).collect())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Vector) {
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    /// `a * x + b * y`
    pub fn lincomb(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        Vector(x.0.iter().zip(&y.0).map(|(u, v)| a * u + b * v).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Concatenate blocks into one vector.
    pub fn concat(blocks: &[Vector]) -> Vector {
        Vector(blocks.iter().flat_map(|b| b.0.iter().copied()).collect())
    }

    /// Split into consecutive blocks of the given sizes.
    pub fn split(&self, sizes: &[usize]) -> Vec<Vector> {
        let mut out = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &s in sizes {
            out.push(Vector(self.0[at..at + s].to_vec()));
            at += s;
        }
        out
    }

    pub(crate) fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub(crate) fn from_dvector(v: &DVector<f64>) -> Vector {
        Vector(v.iter().copied().collect())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

/// Bounded linear map between Euclidean spaces, stored densely.
#[derive(Clone, Debug)]
pub struct LinearMap {
    mat: DMatrix<f64>,
    // s with M^T M = s I, when that holds
    gram_scalar: Option<f64>,
}

impl LinearMap {
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if mat.iter().any(|v| !v.is_finite()) {
            return invalid("linear map has non-finite entries");
        }
        let gram = mat.transpose() * &mat;
        let n = gram.nrows();
        let s = if n > 0 { gram[(0, 0)] } else { 0.0 };
        let scale = 1.0 + s.abs();
        let mut is_scalar = true;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { s } else { 0.0 };
                if (gram[(i, j)] - target).abs() > 1e-12 * scale {
                    is_scalar = false;
                }
            }
        }
        Ok(LinearMap { mat, gram_scalar: is_scalar.then_some(s) })
    }

    /// Row-major constructor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return invalid("ragged matrix rows");
        }
        Self::from_matrix(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled(1.0, n)
    }

    pub fn scaled(s: f64, n: usize) -> Self {
        LinearMap { mat: DMatrix::identity(n, n) * s, gram_scalar: Some(s * s) }
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        Vector::from_dvector(&(&self.mat * x.to_dvector()))
    }

    pub fn apply_t(&self, y: &Vector) -> Vector {
        Vector::from_dvector(&(self.mat.tr_mul(&y.to_dvector())))
    }

    /// `s` such that `M^T M = s I`, if any.
    pub fn gram_scalar(&self) -> Option<f64> {
        self.gram_scalar
    }

    /// Largest eigenvalue of `M^T M`.
    pub fn op_norm_sq(&self) -> f64 {
        if let Some(s) = self.gram_scalar {
            return s;
        }
        let gram = self.mat.transpose() * &self.mat;
        gram.symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> LinearMap {
        LinearMap { mat: &self.mat * s, gram_scalar: self.gram_scalar.map(|g| g * s * s) }
    }
}

/// Linear subspace with an orthonormal basis held in compressed sparse rows,
/// so direct sums of many small blocks stay cheap to project onto.
#[derive(Clone, Debug)]
pub struct Subspace {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Subspace {
    /// Orthonormalize `vectors` by modified Gram-Schmidt. A vector whose
    /// residual falls below `GRAM_SCHMIDT_TOL` times its norm is rejected.
    pub fn from_basis(dim: usize, vectors: &[Vector]) -> Result<Self> {
        let mut ortho: Vec<Vector> = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.dim() != dim {
                return invalid(format!("basis vector of length {} in R^{}", v.dim(), dim));
            }
            if !v.is_finite() {
                return invalid("basis vector has non-finite entries");
            }
            let n0 = v.norm();
            let mut w = v.clone();
            for q in &ortho {
                let c = q.dot(&w);
                w.axpy(-c, q);
            }
            let n = w.norm();
            if n0 == 0.0 || n <= GRAM_SCHMIDT_TOL * n0.max(1.0) {
                return invalid("degenerate basis: linearly dependent vectors");
            }
            ortho.push(w.scale(1.0 / n));
        }
        let mut s = Subspace { dim, indptr: vec![0], indices: Vec::new(), values: Vec::new() };
        for q in ortho {
            for (i, &v) in q.0.iter().enumerate() {
                if v != 0.0 {
                    s.indices.push(i);
                    s.values.push(v);
                }
            }
            s.indptr.push(s.indices.len());
        }
        Ok(s)
    }

    /// Span of the listed coordinate axes.
    pub fn coordinate(dim: usize, axes: &[usize]) -> Result<Self> {
        let mut s = Subspace { dim, indptr: vec![0], indices: Vec::new(), values: Vec::new() };
        let mut seen = vec![false; dim];
        for &a in axes {
            if a >= dim || seen[a] {
                return invalid(format!("bad axis {a} for R^{dim}"));
            }
            seen[a] = true;
            s.indices.push(a);
            s.values.push(1.0);
            s.indptr.push(s.indices.len());
        }
        Ok(s)
    }

    /// Direct sum of lines, one per consecutive 2-D block: block `i` spans the
    /// unit vector `(cos t_i, sin t_i)` in coordinates `2i, 2i+1`.
    pub fn lines_in_planes(angles: &[f64]) -> Self {
        let mut s = Subspace {
            dim: 2 * angles.len(),
            indptr: Vec::with_capacity(angles.len() + 1),
            indices: Vec::with_capacity(2 * angles.len()),
            values: Vec::with_capacity(2 * angles.len()),
        };
        s.indptr.push(0);
        for (i, &t) in angles.iter().enumerate() {
            let (sn, cs) = t.sin_cos();
            if cs != 0.0 {
                s.indices.push(2 * i);
                s.values.push(cs);
            }
            if sn != 0.0 {
                s.indices.push(2 * i + 1);
                s.values.push(sn);
            }
            s.indptr.push(s.indices.len());
        }
        s
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn basis_vector(&self, j: usize) -> Vector {
        let mut v = Vector::zeros(self.dim);
        for p in self.indptr[j]..self.indptr[j + 1] {
            v[self.indices[p]] = self.values[p];
        }
        v
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for j in 0..self.rank() {
            let r = self.indptr[j]..self.indptr[j + 1];
            let c: f64 = r.clone().map(|p| self.values[p] * x[self.indices[p]]).sum();
            if c != 0.0 {
                for p in r {
                    out[self.indices[p]] += c * self.values[p];
                }
            }
        }
        out
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        x.dist(&self.project(x))
    }

    /// Orthogonal complement of `self`, as a dense basis.
    pub fn complement(&self) -> Result<Subspace> {
        let mut extra = Vec::new();
        let mut current = self.clone();
        for i in 0..self.dim {
            let mut e = Vector::zeros(self.dim);
            e[i] = 1.0;
            let r = &e - &current.project(&e);
            if r.norm() > 1e-8 {
                let mut all: Vec<Vector> = (0..current.rank()).map(|j| current.basis_vector(j)).collect();
                all.push(r);
                current = Subspace::from_basis(self.dim, &all)?;
                extra.push(current.basis_vector(current.rank() - 1));
            }
        }
        Subspace::from_basis(self.dim, &extra)
    }
}

/// Closed convex set with an exact projection.
#[derive(Clone, Debug)]
pub enum ConvexSet {
    Subspace(Subspace),
    /// `offset + subspace`; the stored offset is orthogonal to the subspace.
    Affine { subspace: Subspace, offset: Vector },
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
}

impl ConvexSet {
    pub fn affine(subspace: Subspace, offset: Vector) -> Result<Self> {
        if offset.dim() != subspace.ambient_dim() {
            return invalid("affine offset dimension mismatch");
        }
        let offset = &offset - &subspace.project(&offset);
        Ok(ConvexSet::Affine { subspace, offset })
    }

    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.dim() != hi.dim() || lo.0.iter().zip(&hi.0).any(|(l, h)| l > h) {
            return invalid("box bounds must have equal length and lo <= hi");
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return invalid("ball radius must be nonnegative");
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Subspace(s) => s.ambient_dim(),
            ConvexSet::Affine { subspace, .. } => subspace.ambient_dim(),
            ConvexSet::Box { lo, .. } => lo.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
        }
    }

    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            ConvexSet::Subspace(s) => s.project(x),
            ConvexSet::Affine { subspace, offset } => {
                let shifted = x - offset;
                &subspace.project(&shifted) + offset
            }
            ConvexSet::Box { lo, hi } => {
                Vector(x.0.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect())
            }
            ConvexSet::Ball { center, radius } => {
                let d = x.dist(center);
                if d <= *radius {
                    x.clone()
                } else {
                    Vector::lincomb(1.0 - radius / d, center, radius / d, x)
                }
            }
        }
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        x.dist(&self.project(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_orthonormalizes() {
        let s = Subspace::from_basis(3, &[Vector(vec![1.0, 1.0, 0.0]), Vector(vec![1.0, 0.0, 0.0])]).unwrap();
        let a = s.basis_vector(0);
        let b = s.basis_vector(1);
        assert!((a.norm() - 1.0).abs() < 1e-14);
        assert!(a.dot(&b).abs() < 1e-14);
        let p = s.project(&Vector(vec![3.0, -2.0, 5.0]));
        assert!(p.max_abs_diff(&Vector(vec![3.0, -2.0, 0.0])) < 1e-14);
    }

    #[test]
    fn degenerate_basis_rejected() {
        let r = Subspace::from_basis(2, &[Vector(vec![1.0, 2.0]), Vector(vec![2.0, 4.0])]);
        assert!(r.is_err());
    }

    #[test]
    fn lines_in_planes_projection() {
        let t = 0.3f64;
        let s = Subspace::lines_in_planes(&[t, 0.0]);
        let p = s.project(&Vector(vec![1.0, 0.0, 2.0, 7.0]));
        let (sn, cs) = t.sin_cos();
        let want = Vector(vec![cs * cs, cs * sn, 2.0, 0.0]);
        assert!(p.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn complement_has_full_rank() {
        let s = Subspace::from_basis(4, &[Vector(vec![1.0, 2.0, 0.0, 1.0])]).unwrap();
        let c = s.complement().unwrap();
        assert_eq!(c.rank(), 3);
        let x = Vector(vec![0.5, -1.0, 2.0, 3.0]);
        let sum = &s.project(&x) + &c.project(&x);
        assert!(sum.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn ball_and_box_projection() {
        let b = ConvexSet::ball(Vector(vec![0.0, 0.0]), 1.0).unwrap();
        let p = b.project(&Vector(vec![3.0, 4.0]));
        assert!(p.max_abs_diff(&Vector(vec![0.6, 0.8])) < 1e-15);
        let bx = ConvexSet::boxed(Vector(vec![-1.0, 0.0]), Vector(vec![1.0, 1.0])).unwrap();
        assert_eq!(bx.project(&Vector(vec![5.0, -2.0])), Vector(vec![1.0, 0.0]));
    }

    #[test]
    fn scalar_gram_detected() {
        let m = LinearMap::from_rows(&[vec![0.0, 2.0], vec![-2.0, 0.0]]).unwrap();
        assert_eq!(m.gram_scalar(), Some(4.0));
        let m = LinearMap::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.gram_scalar(), None);
    }
}
