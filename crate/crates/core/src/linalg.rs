//! Dense complex matrices over Krein spaces.
//!
//! Every rank decision in the crate goes through [`Tolerance`]: a singular
//! value counts as zero when it is at most `rank_rel * sigma_max`, and the
//! whole matrix is treated as zero when `sigma_max <= abs`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BrstError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rank_rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rank_rel: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rank_rel: f64) -> Result<Self> {
        if !(abs.is_finite() && rank_rel.is_finite() && abs >= 0.0 && rank_rel >= 0.0) {
            return Err(BrstError::InvalidInput(format!(
                "tolerances must be finite and nonnegative (abs={abs}, rank_rel={rank_rel})"
            )));
        }
        Ok(Tolerance { abs, rank_rel })
    }

    /// Threshold below which subspaces are declared equal.
    pub fn subspace(&self) -> f64 {
        100.0 * self.abs
    }

    fn cutoff(&self, sigma_max: f64) -> f64 {
        if sigma_max <= self.abs {
            f64::INFINITY
        } else {
            self.rank_rel * sigma_max
        }
    }
}

/// Finite-dimensional Krein space: `<<x, y>> = <x, J y>`.
#[derive(Debug, Clone)]
pub struct KreinSpace {
    j: CMat,
}

impl KreinSpace {
    pub fn new(j: CMat, tol: &Tolerance) -> Result<Self> {
        if !j.is_square() {
            return Err(BrstError::Dimension { expected: j.nrows(), found: j.ncols() });
        }
        let n = j.nrows();
        let inv = (&j * &j - CMat::identity(n, n)).norm();
        let herm = (&j - j.adjoint()).norm();
        if inv > tol.subspace() || herm > tol.subspace() {
            return Err(BrstError::InvalidInput(format!(
                "J is not a fundamental symmetry (|J^2-1|={inv:.3e}, |J-J*|={herm:.3e})"
            )));
        }
        Ok(KreinSpace { j })
    }

    /// Positive-definite space with `J = 1`.
    pub fn hilbert(dim: usize) -> Self {
        KreinSpace { j: CMat::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn j(&self) -> &CMat {
        &self.j
    }

    pub fn form(&self, x: &CVec, y: &CVec) -> Complex64 {
        x.dotc(&(&self.j * y))
    }
}

/// `A† = J A* J`.
pub fn krein_adjoint(a: &CMat, k: &KreinSpace) -> Result<CMat> {
    if !a.is_square() || a.nrows() != k.dim() {
        return Err(BrstError::Dimension { expected: k.dim(), found: a.nrows().max(a.ncols()) });
    }
    Ok(k.j() * a.adjoint() * k.j())
}

/// Singular values sorted descending together with the right singular vectors
/// (as columns, in the same order). The matrix is zero-padded to at least
/// square so that the full right basis is always available.
fn svd_right(a: &CMat) -> (Vec<f64>, CMat) {
    let (r, n) = a.shape();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let padded = if r < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = CMat::zeros(n, order.len());
    for (k, &i) in order.iter().enumerate() {
        for row in 0..n {
            v[(row, k)] = v_t[(i, row)].conj();
        }
    }
    (sv, v)
}

fn svd_left(a: &CMat) -> (Vec<f64>, CMat) {
    let (sv, u) = svd_right(&a.adjoint());
    (sv, u)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Operator (spectral) norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn numerical_rank(sv: &[f64], tol: &Tolerance) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = tol.cutoff(smax);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Like [`numerical_rank`] but refuses to decide when some singular value sits
/// within two decades of the cutoff.
pub fn strict_rank(sv: &[f64], tol: &Tolerance) -> Result<usize> {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax <= tol.abs {
        return Ok(0);
    }
    let cut = tol.cutoff(smax);
    let ambiguous: Vec<f64> =
        sv.iter().copied().filter(|&s| s > cut * 1e-2 && s <= cut * 1e2).collect();
    if !ambiguous.is_empty() {
        return Err(BrstError::RankAmbiguity { cutoff: cut, values: ambiguous });
    }
    Ok(numerical_rank(sv, tol))
}

/// Orthonormal basis of the numerical nullspace, as columns.
pub fn kernel_basis(a: &CMat, tol: &Tolerance) -> CMat {
    let n = a.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let (sv, v) = svd_right(a);
    let rank = numerical_rank(&sv, tol);
    v.columns(rank, n - rank).into_owned()
}

/// Orthonormal basis of the numerical column space, as columns.
pub fn range_basis(a: &CMat, tol: &Tolerance) -> CMat {
    let m = a.nrows();
    if m == 0 || a.ncols() == 0 {
        return CMat::zeros(m, 0);
    }
    let (sv, u) = svd_left(a);
    let rank = numerical_rank(&sv, tol);
    u.columns(0, rank).into_owned()
}

pub fn range_basis_strict(a: &CMat, tol: &Tolerance) -> Result<CMat> {
    let m = a.nrows();
    if m == 0 || a.ncols() == 0 {
        return Ok(CMat::zeros(m, 0));
    }
    let (sv, u) = svd_left(a);
    let rank = strict_rank(&sv, tol)?;
    Ok(u.columns(0, rank).into_owned())
}

pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Orthogonal projection onto the numerical column space of `a`.
pub fn range_projection(a: &CMat, tol: &Tolerance) -> CMat {
    projector(&range_basis(a, tol))
}

#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(a: &CMat, tol: &Tolerance) -> Result<Eigh> {
    if !a.is_square() {
        return Err(BrstError::Dimension { expected: a.nrows(), found: a.ncols() });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Eigh { values: Vec::new(), vectors: CMat::zeros(0, 0) });
    }
    let skew = (a - a.adjoint()).norm();
    if skew > tol.abs * a.norm().max(1.0) {
        return Err(BrstError::NotHermitian { residual: skew });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(Eigh { values, vectors })
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c(x, 0.0))))
}

pub fn basis_vector(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

/// Modified Gram–Schmidt on the columns of `a`, dropping columns whose
/// residual norm falls below `drop`.
pub fn gram_schmidt(a: &CMat, drop: f64) -> CMat {
    let mut out: Vec<CVec> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for q in &out {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let nv = v.norm();
        if nv > drop {
            out.push(v / c(nv, 0.0));
        }
    }
    columns_to_matrix(a.nrows(), &out)
}

pub fn columns_to_matrix(rows: usize, cols: &[CVec]) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Largest residual `|(1 - P_V) w|` over the columns `w` of `w_basis`, where
/// `v_basis` has orthonormal columns.
pub fn containment_residual(w_basis: &CMat, v_basis: &CMat) -> f64 {
    if w_basis.ncols() == 0 {
        return 0.0;
    }
    let proj = if v_basis.ncols() == 0 {
        w_basis.clone()
    } else {
        w_basis - v_basis * (v_basis.adjoint() * w_basis)
    };
    (0..proj.ncols()).map(|j| proj.column(j).norm()).fold(0.0, f64::max)
}

/// Two-sided containment residual between orthonormal column bases.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return f64::INFINITY;
    }
    containment_residual(a, b).max(containment_residual(b, a))
}

/// Orthonormal basis of the intersection of two column spaces (both
/// orthonormal), from the nullspace of `[A, -B]`.
pub fn intersect(a: &CMat, b: &CMat, tol: &Tolerance) -> CMat {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let mut stacked = CMat::zeros(n, a.ncols() + b.ncols());
    stacked.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    stacked.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(&(-b));
    let null = kernel_basis(&stacked, tol);
    let coeffs = null.rows(0, a.ncols()).into_owned();
    range_basis(&(a * coeffs), tol)
}

/// Signature `(n_plus, n_minus, n_zero)` of the form `<<x, y>>` restricted
/// to the column span of `basis` (orthonormal columns).
pub fn krein_signature(basis: &CMat, k: &KreinSpace, tol: &Tolerance) -> Result<(usize, usize, usize)> {
    if basis.ncols() == 0 {
        return Ok((0, 0, 0));
    }
    let gram = basis.adjoint() * k.j() * basis;
    let eig = hermitian_eig(&gram, &Tolerance { abs: tol.subspace(), ..*tol })?;
    let thr = tol.subspace();
    let plus = eig.values.iter().filter(|&&x| x > thr).count();
    let minus = eig.values.iter().filter(|&&x| x < -thr).count();
    Ok((plus, minus, eig.values.len() - plus - minus))
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
