//! Decomposition `H = H_d + H_s + H_p` of a nilpotent charge and the operator
//! cohomology of its superderivation `delta(A) = QA - gamma(A)Q`.

use serde::{Deserialize, Serialize};

use crate::check::{relative, Check};
use crate::error::{BrstError, Result};
use crate::hamiltonian::BrstComplex;
use crate::linalg::{self, kron, CMat, CVec, KreinSpace, Tolerance};
use crate::subspace::{unvec, vec_of, OperatorSubspace};

/// Largest ambient dimension for which the `d^2 x d^2` superoperator is formed.
pub const MAX_SUPEROPERATOR_DIM: usize = 64;

#[derive(Debug, Clone)]
pub struct DspData {
    pub p_d: CMat,
    pub p_s: CMat,
    pub p_p: CMat,
    /// Orthonormal basis of `H_s`, as columns.
    pub basis_s: CMat,
    pub d_d: usize,
    pub d_s: usize,
    pub d_p: usize,
}

impl DspData {
    /// Completeness, orthogonality and the kernel splitting, plus the Krein
    /// relations when `q` is Krein self-adjoint.
    pub fn checks(&self, q: &CMat, k: &KreinSpace, tol: &Tolerance) -> Vec<Check> {
        let n = q.nrows();
        let bound = 10.0 * tol.rank_rel;
        let mut out = vec![
            Check::at_most(
                "dsp_complete",
                linalg::op_norm(&(&self.p_d + &self.p_s + &self.p_p - linalg::identity(n))),
                bound,
            ),
            Check::at_most(
                "dsp_orthogonal",
                [&self.p_d * &self.p_s, &self.p_d * &self.p_p, &self.p_s * &self.p_p]
                    .iter()
                    .map(linalg::op_norm)
                    .fold(0.0, f64::max),
                bound,
            ),
        ];
        let ker_q = linalg::kernel_basis(q, tol);
        let split = linalg::projector(&ker_q) - &self.p_s - &self.p_d;
        out.push(Check::at_most("kernel_is_s_plus_d", linalg::op_norm(&split), bound));

        let j = k.j();
        let qn = linalg::op_norm(q);
        if linalg::op_norm(&(q - j * q.adjoint() * j)) <= tol.subspace() * qn.max(1.0) {
            out.push(Check::at_most("krein_s_invariant", linalg::op_norm(&(j * &self.p_s * j - &self.p_s)), bound));
            out.push(Check::at_most("krein_swaps_d_p", linalg::op_norm(&(j * &self.p_d * j - &self.p_p)), bound));
        }
        out
    }
}

pub fn dsp_decompose(q: &CMat, k: &KreinSpace, tol: &Tolerance) -> Result<DspData> {
    let n = q.nrows();
    if !q.is_square() || n != k.dim() {
        return Err(BrstError::Dimension { expected: k.dim(), found: n });
    }
    let qn = linalg::op_norm(q);
    let sq = linalg::op_norm(&(q * q));
    if sq > tol.abs * (qn * qn).max(tol.abs) {
        return Err(BrstError::Nilpotency { residual: relative(sq, qn * qn) });
    }
    let range_d = linalg::range_basis_strict(q, tol)?;
    let range_p = linalg::range_basis_strict(&q.adjoint(), tol)?;
    let mut stacked = CMat::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(q);
    stacked.view_mut((n, 0), (n, n)).copy_from(&q.adjoint());
    let basis_s = linalg::kernel_basis(&stacked, tol);
    Ok(DspData {
        p_d: linalg::projector(&range_d),
        p_p: linalg::projector(&range_p),
        p_s: linalg::projector(&basis_s),
        d_d: range_d.ncols(),
        d_p: range_p.ncols(),
        d_s: basis_s.ncols(),
        basis_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Physicality {
    pub physical: bool,
    pub residual: f64,
    pub signature: (usize, usize, usize),
}

/// Whether `J P_s = P_s`, with the signature of the Krein form on `H_s`.
pub fn physicality_check(dsp: &DspData, k: &KreinSpace, tol: &Tolerance) -> Result<Physicality> {
    let residual = linalg::op_norm(&(k.j() * &dsp.p_s - &dsp.p_s));
    Ok(Physicality {
        physical: residual <= tol.subspace(),
        residual,
        signature: linalg::krein_signature(&dsp.basis_s, k, tol)?,
    })
}

/// `A -> QA - Gamma A Gamma Q` as a matrix on column-major flattened operators.
#[derive(Debug, Clone)]
pub struct Superderivation {
    dim: usize,
    q: CMat,
    grading: CMat,
    matrix: CMat,
}

pub fn superderivation_matrix(q: &CMat, grading: &CMat, tol: &Tolerance) -> Result<Superderivation> {
    let d = q.nrows();
    if grading.shape() != q.shape() {
        return Err(BrstError::Dimension { expected: d, found: grading.nrows() });
    }
    if d > MAX_SUPEROPERATOR_DIM {
        return Err(BrstError::Size(format!("superoperator on dimension {d} exceeds {MAX_SUPEROPERATOR_DIM}")));
    }
    let invol = linalg::op_norm(&(grading * grading - linalg::identity(d)));
    let odd = linalg::op_norm(&(grading * q * grading + q));
    if invol > tol.subspace() || odd > tol.subspace() * linalg::op_norm(q).max(1.0) {
        return Err(BrstError::Grading(format!("|Gamma^2 - 1| = {invol:.3e}, |Gamma Q Gamma + Q| = {odd:.3e}")));
    }
    let gq = grading * q;
    let matrix = kron(&linalg::identity(d), q) - kron(&gq.transpose(), grading);
    Ok(Superderivation { dim: d, q: q.clone(), grading: grading.clone(), matrix })
}

impl Superderivation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        &self.q * a - &self.grading * a * &self.grading * &self.q
    }

    pub fn square_residual(&self) -> f64 {
        relative(linalg::op_norm(&(&self.matrix * &self.matrix)), linalg::op_norm(&self.matrix).powi(2))
    }
}

/// Kernel of `delta`, intersected with `restrict_to` when given.
pub fn ker_delta(delta: &Superderivation, restrict_to: Option<&OperatorSubspace>, tol: &Tolerance) -> Result<OperatorSubspace> {
    let d = delta.dim;
    match restrict_to {
        None => Ok(OperatorSubspace::from_orthonormal(d, linalg::kernel_basis(&delta.matrix, tol))),
        Some(w) => {
            if w.ambient_dim() != d {
                return Err(BrstError::Dimension { expected: d, found: w.ambient_dim() });
            }
            if w.is_empty() {
                return Ok(OperatorSubspace::zero(d));
            }
            let coeffs = linalg::kernel_basis(&(&delta.matrix * w.vectorized()), tol);
            Ok(OperatorSubspace::from_orthonormal(d, w.vectorized() * coeffs))
        }
    }
}

pub fn ran_delta(delta: &Superderivation, tol: &Tolerance) -> OperatorSubspace {
    OperatorSubspace::from_orthonormal(delta.dim, linalg::range_basis(&delta.matrix, tol))
}

/// `Ran delta` lies in `Ker delta` and is a two-sided ideal there; products
/// are sampled on up to `max_pairs` basis pairs.
pub fn ran_delta_checks(ker: &OperatorSubspace, ran: &OperatorSubspace, max_pairs: usize, tol: &Tolerance) -> Vec<Check> {
    let kms = ker.matrices();
    let rms = ran.matrices();
    let total = kms.len() * rms.len();
    let step = total.div_ceil(max_pairs.max(1)).max(1);
    let ideal = (0..total)
        .step_by(step)
        .map(|idx| {
            let (r, k) = (&rms[idx / kms.len()], &kms[idx % kms.len()]);
            ran.distance(&(r * k)).max(ran.distance(&(k * r)))
        })
        .fold(0.0, f64::max);
    vec![
        Check::at_most("ran_in_ker", ran.containment_residual(ker), tol.subspace()),
        Check::at_most("ran_is_ideal", ideal, tol.subspace()),
    ]
}

pub fn phi_s(a: &CMat, dsp: &DspData) -> CMat {
    &dsp.p_s * a * &dsp.p_s
}

pub fn phi_s_subspace(s: &OperatorSubspace, dsp: &DspData, tol: &Tolerance) -> OperatorSubspace {
    s.map(|a| phi_s(a, dsp), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub ker_dim: usize,
    pub ran_dim: usize,
    pub image_dim: usize,
    pub ran_in_ker: f64,
    /// Two-sided residual of `Ran delta = Ker delta  /\  Ker Phi_s`.
    pub equality_residual: f64,
    /// Largest off-diagonal block `P_s B P_d`, `P_p B P_d`, `P_p B P_s` over `Ker delta`.
    pub block_residual: f64,
    pub multiplicativity_residual: f64,
    /// Distance of the identity to `Ran delta`.
    pub identity_distance: f64,
    pub identity_in_ran: bool,
}

impl StructureReport {
    pub fn checks(&self, d_s: usize, tol: &Tolerance) -> Vec<Check> {
        vec![
            Check::at_most("ran_delta_in_ker_delta", self.ran_in_ker, tol.subspace()),
            Check::at_most("ran_delta_eq_ker_delta_cap_ker_phi", self.equality_residual, tol.subspace()),
            Check::at_most("ker_delta_block_form", self.block_residual, tol.subspace()),
            Check::at_most("phi_s_multiplicative", self.multiplicativity_residual, tol.subspace()),
            Check::at_most(
                "image_dim_is_ker_minus_ran",
                (self.image_dim as f64 - (self.ker_dim as f64 - self.ran_dim as f64)).abs(),
                0.0,
            ),
            Check::flag("identity_in_ran_iff_hs_trivial", self.identity_in_ran == (d_s == 0)),
        ]
    }
}

pub fn structure_theorem_check(delta: &Superderivation, dsp: &DspData, tol: &Tolerance) -> Result<StructureReport> {
    let d = delta.dim;
    let ker = ker_delta(delta, None, tol)?;
    let ran = ran_delta(delta, tol);
    let images: Vec<CMat> = ker.matrices().iter().map(|b| phi_s(b, dsp)).collect();
    let mut cols = CMat::zeros(d * d, images.len());
    for (j, m) in images.iter().enumerate() {
        cols.set_column(j, &vec_of(m));
    }
    let null = linalg::kernel_basis(&cols, tol);
    let ker_cap = OperatorSubspace::from_orthonormal(d, ker.vectorized() * &null);
    let image_dim = images.len() - null.ncols();

    let equality_residual = ker_cap.distance_to(&ran);
    if equality_residual > tol.subspace() {
        let witness = if ker_cap.len() != ran.len() { "dimension mismatch" } else { "subspaces differ" };
        return Err(BrstError::StructureTheorem { what: witness.into(), residual: equality_residual });
    }

    let mats = ker.matrices();
    let block_residual = mats
        .iter()
        .map(|b| {
            [&dsp.p_s * b * &dsp.p_d, &dsp.p_p * b * &dsp.p_d, &dsp.p_p * b * &dsp.p_s]
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let mult = sampled_pairs(mats.len(), 100)
        .map(|(i, j)| {
            (phi_s(&(&mats[i] * &mats[j]), dsp) - phi_s(&mats[i], dsp) * phi_s(&mats[j], dsp)).norm()
        })
        .fold(0.0, f64::max);
    let identity_distance = ran.distance(&linalg::identity(d));

    Ok(StructureReport {
        ker_dim: ker.len(),
        ran_dim: ran.len(),
        image_dim,
        ran_in_ker: ran.containment_residual(&ker),
        equality_residual,
        block_residual,
        multiplicativity_residual: mult,
        identity_distance,
        identity_in_ran: identity_distance <= tol.subspace(),
    })
}

/// Deterministic spread of at most `max` index pairs over an `n x n` grid.
fn sampled_pairs(n: usize, max: usize) -> impl Iterator<Item = (usize, usize)> {
    let total = n * n;
    let step = total.div_ceil(max.max(1)).max(1);
    (0..total).step_by(step).map(move |idx| (idx / n, idx % n))
}

#[derive(Debug, Clone)]
pub struct PhysicalAlgebra {
    /// `Phi_s(Ker delta /\ restrict_to)` in the ambient frame.
    pub image: OperatorSubspace,
    /// The same, pulled back to `H_s` through its orthonormal basis.
    pub on_hs: OperatorSubspace,
    /// `Ker delta /\ restrict_to`.
    pub kernel: OperatorSubspace,
    pub restrict_is_algebra: bool,
    pub star_closed: bool,
    pub involution_factors: bool,
}

pub fn brst_physical_algebra(
    delta: &Superderivation,
    dsp: &DspData,
    restrict_to: Option<&OperatorSubspace>,
    k: &KreinSpace,
    tol: &Tolerance,
) -> Result<PhysicalAlgebra> {
    let (kernel, restrict_is_algebra) = match restrict_to {
        None => (ker_delta(delta, None, tol)?, true),
        Some(w) if w.product_residual(400) <= tol.subspace() => (ker_delta(delta, Some(w), tol)?, true),
        Some(w) => {
            let generated = OperatorSubspace::generated_algebra(w.ambient_dim(), &w.matrices(), tol);
            (ker_delta(delta, Some(&generated), tol)?, false)
        }
    };
    let image = phi_s_subspace(&kernel, dsp, tol);
    let on_hs = image.compress(&dsp.basis_s, tol);

    let j = k.j();
    let kadj = |a: &CMat| j * a.adjoint() * j;
    let kernel_mats = kernel.matrices();
    let kernel_closed = kernel_mats.iter().map(|a| kernel.distance(&kadj(a))).fold(0.0, f64::max);
    // The part of the kernel killed by Phi_s must be closed as well.
    let killed: Vec<CMat> = kernel_mats
        .iter()
        .map(|a| a - phi_s(a, dsp))
        .filter(|a| a.norm() > tol.subspace())
        .collect();
    let killed_closed = killed
        .iter()
        .map(|a| phi_s(&kadj(a), dsp).norm())
        .fold(0.0, f64::max);

    Ok(PhysicalAlgebra {
        star_closed: image.adjoint_residual() <= tol.subspace(),
        involution_factors: kernel_closed.max(killed_closed) <= tol.subspace(),
        image,
        on_hs,
        kernel,
        restrict_is_algebra,
    })
}

/// `Phi_s` of the full matrix algebra without forming the superoperator.
///
/// Whenever `Q P_s = P_s Q = 0` and `P_s` is even, every `P_s A P_s` lies in
/// `Ker delta`, so the image is all of `B(H_s)`. Returns the image together
/// with the largest of those three residuals.
pub fn full_algebra_image(q: &CMat, grading: &CMat, dsp: &DspData, tol: &Tolerance) -> (OperatorSubspace, f64) {
    let p = &dsp.p_s;
    let residual = [q * p, p * q, grading * p * grading - p]
        .iter()
        .map(linalg::op_norm)
        .fold(0.0, f64::max);
    (OperatorSubspace::compressed_full(p, tol), residual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateCondition {
    pub annihilates_charge: bool,
    pub kills_delta_image: bool,
    pub laplacian_zero: bool,
}

impl StateCondition {
    pub fn consistent(&self) -> bool {
        self.annihilates_charge == self.kills_delta_image && self.kills_delta_image == self.laplacian_zero
    }
}

/// The three conditions on the vector state of a unit vector `omega`:
/// `<omega, A Q omega> = 0`, `<omega, delta(A) omega> = 0` for all matrix
/// units `A`, and `<omega, Delta omega> = 0`. The first two are linear in `Q`
/// and are judged at `sqrt(tol)`, the last is quadratic and judged at `tol`.
pub fn state_condition_check(omega: &CVec, cplx: &BrstComplex, tol: &Tolerance) -> StateCondition {
    let q = &cplx.q;
    let g = &cplx.grading;
    let scale = linalg::op_norm(q).max(1.0);
    let qw = q * omega;
    let qsw = q.adjoint() * omega;
    let gw = g * omega;
    let gqw = g * &qw;

    let first = omega.iter().flat_map(|wi| qw.iter().map(move |x| (wi.conj() * x).norm())).fold(0.0, f64::max);
    let d = omega.len();
    let mut second: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let v = qsw[i].conj() * omega[j] - gw[i].conj() * gqw[j];
            second = second.max(v.norm());
        }
    }
    let third = qw.norm_squared() + qsw.norm_squared();

    let lin = tol.abs.sqrt() * scale;
    StateCondition {
        annihilates_charge: first <= lin,
        kills_delta_image: second <= lin,
        laplacian_zero: third <= tol.abs * scale * scale,
    }
}

/// Matrix of `A -> P_s A P_s` on flattened operators.
pub fn phi_s_matrix(dsp: &DspData) -> CMat {
    kron(&dsp.p_s.transpose(), &dsp.p_s)
}

pub fn unflatten(v: &CVec, d: usize) -> CMat {
    unvec(v.as_slice(), d)
}
