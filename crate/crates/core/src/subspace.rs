//! Linear subspaces of the full matrix algebra on `C^d`.
//!
//! Matrices are flattened column-major, so the Hilbert–Schmidt inner product
//! `tr(A* B)` becomes the ordinary inner product of the flattened vectors.

use crate::error::{BrstError, Result};
use crate::linalg::{self, CMat, CVec, Tolerance};

pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvec(v: &[num_complex::Complex64], d: usize) -> CMat {
    CMat::from_column_slice(d, d, v)
}

#[derive(Debug, Clone)]
pub struct OperatorSubspace {
    dim: usize,
    basis: CMat,
}

impl OperatorSubspace {
    /// Wraps columns that are already Hilbert–Schmidt orthonormal.
    pub fn from_orthonormal(dim: usize, basis: CMat) -> Self {
        debug_assert_eq!(basis.nrows(), dim * dim);
        OperatorSubspace { dim, basis }
    }

    /// Span of arbitrary flattened columns.
    pub fn from_columns(dim: usize, cols: &CMat, tol: &Tolerance) -> Self {
        OperatorSubspace { dim, basis: linalg::range_basis(cols, tol) }
    }

    pub fn span(dim: usize, mats: &[CMat], tol: &Tolerance) -> Self {
        let mut cols = CMat::zeros(dim * dim, mats.len());
        for (k, m) in mats.iter().enumerate() {
            cols.set_column(k, &vec_of(m));
        }
        Self::from_columns(dim, &cols, tol)
    }

    pub fn zero(dim: usize) -> Self {
        OperatorSubspace { dim, basis: CMat::zeros(dim * dim, 0) }
    }

    pub fn full(dim: usize) -> Self {
        OperatorSubspace { dim, basis: linalg::identity(dim * dim) }
    }

    pub fn scalars(dim: usize) -> Self {
        let v = vec_of(&linalg::identity(dim)) / linalg::c((dim as f64).sqrt(), 0.0);
        OperatorSubspace { dim, basis: linalg::columns_to_matrix(dim * dim, &[v]) }
    }

    /// All matrices supported on the range of the orthogonal projection `p`.
    pub fn compressed_full(p: &CMat, tol: &Tolerance) -> Self {
        let d = p.nrows();
        let v = linalg::range_basis(p, tol);
        let r = v.ncols();
        let mut mats = Vec::with_capacity(r * r);
        for j in 0..r {
            for i in 0..r {
                mats.push(v.column(i) * v.column(j).adjoint());
            }
        }
        Self::span(d, &mats, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }

    pub fn vectorized(&self) -> &CMat {
        &self.basis
    }

    pub fn matrix(&self, k: usize) -> CMat {
        unvec(self.basis.column(k).as_slice(), self.dim)
    }

    pub fn matrices(&self) -> Vec<CMat> {
        (0..self.len()).map(|k| self.matrix(k)).collect()
    }

    /// Hilbert–Schmidt distance from `a` to the subspace.
    pub fn distance(&self, a: &CMat) -> f64 {
        let v = vec_of(a);
        if self.is_empty() {
            return v.norm();
        }
        (&v - &self.basis * (self.basis.adjoint() * &v)).norm()
    }

    pub fn project(&self, a: &CMat) -> CMat {
        if self.is_empty() {
            return CMat::zeros(self.dim, self.dim);
        }
        let v = vec_of(a);
        unvec((&self.basis * (self.basis.adjoint() * v)).as_slice(), self.dim)
    }

    /// Largest residual of `self`'s basis outside `other`.
    pub fn containment_residual(&self, other: &OperatorSubspace) -> f64 {
        linalg::containment_residual(&self.basis, &other.basis)
    }

    pub fn distance_to(&self, other: &OperatorSubspace) -> f64 {
        linalg::subspace_distance(&self.basis, &other.basis)
    }

    pub fn intersection(&self, other: &OperatorSubspace, tol: &Tolerance) -> Result<Self> {
        self.check_same(other)?;
        Ok(OperatorSubspace { dim: self.dim, basis: linalg::intersect(&self.basis, &other.basis, tol) })
    }

    pub fn sum(&self, other: &OperatorSubspace, tol: &Tolerance) -> Result<Self> {
        self.check_same(other)?;
        let mut cols = CMat::zeros(self.dim * self.dim, self.len() + other.len());
        cols.view_mut((0, 0), (self.dim * self.dim, self.len())).copy_from(&self.basis);
        cols.view_mut((0, self.len()), (self.dim * self.dim, other.len())).copy_from(&other.basis);
        Ok(Self::from_columns(self.dim, &cols, tol))
    }

    /// Image under a linear map on matrices.
    pub fn map(&self, f: impl Fn(&CMat) -> CMat, tol: &Tolerance) -> Self {
        let imgs: Vec<CMat> = self.matrices().iter().map(&f).collect();
        Self::span(self.dim, &imgs, tol)
    }

    /// Pulls the subspace back through an isometry `v` (`d x r`): `A -> v* A v`.
    pub fn compress(&self, v: &CMat, tol: &Tolerance) -> Self {
        let r = v.ncols();
        let imgs: Vec<CMat> = self.matrices().iter().map(|a| v.adjoint() * a * v).collect();
        Self::span(r, &imgs, tol)
    }

    pub fn adjoint_residual(&self) -> f64 {
        (0..self.len()).map(|k| self.distance(&self.matrix(k).adjoint())).fold(0.0, f64::max)
    }

    /// Residual of products of basis pairs outside the span. At most
    /// `max_pairs` pairs are visited, spread evenly over the index grid.
    pub fn product_residual(&self, max_pairs: usize) -> f64 {
        let k = self.len();
        let total = k * k;
        if total == 0 {
            return 0.0;
        }
        let step = total.div_ceil(max_pairs.max(1)).max(1);
        let mats = self.matrices();
        (0..total)
            .step_by(step)
            .map(|idx| self.distance(&(&mats[idx / k] * &mats[idx % k])))
            .fold(0.0, f64::max)
    }

    /// Smallest unital algebra containing the generators.
    pub fn generated_algebra(dim: usize, generators: &[CMat], tol: &Tolerance) -> Self {
        let mut seeds = vec![linalg::identity(dim)];
        seeds.extend(generators.iter().cloned());
        let mut space = Self::span(dim, &seeds, tol);
        loop {
            let mats = space.matrices();
            let mut products = mats.clone();
            for a in &mats {
                for g in generators {
                    products.push(a * g);
                }
            }
            let next = Self::span(dim, &products, tol);
            if next.len() == space.len() {
                return next;
            }
            space = next;
        }
    }

    fn check_same(&self, other: &OperatorSubspace) -> Result<()> {
        if self.dim != other.dim {
            return Err(BrstError::Dimension { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}
