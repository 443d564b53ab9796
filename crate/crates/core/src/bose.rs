//! Truncated bosonic Fock–Krein space and the charges built on it.
//!
//! One-particle modes are laid out as `D_t` (indices `0..dt`), then `D_1`
//! (`dt..dt+m`, the vectors `f_j`), then `D_2` (`dt+m..dt+2m`, the vectors
//! `J f_j`). The one-particle symmetry is the identity on `D_t` and swaps
//! `D_1` with `D_2`. Creators send the top particle-number sector to zero,
//! so identities of degree one in creators are exact on particle number
//! `<= cutoff - 1`, the guard subspace.
//!
//! Matrices `b_k` are the ordinary Hilbert-space annihilators. The Krein
//! annihilator is `a(g) = b(Jg)`, its Krein adjoint is `b*(g)`, and the
//! Krein field is `A(g) = (b(Jg) + b*(g)) / sqrt 2`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::check::{relative, Check};
use crate::error::{BrstError, Result};
use crate::ghost::GhostRep;
use crate::hamiltonian::{delta_operator, BrstComplex, ConstraintSystem, Layout};
use crate::linalg::{self, c, kron, CMat, CVec, KreinSpace, Tolerance, I, ONE};

const MAX_ONE_PARTICLE: usize = 6;
const MAX_FOCK_DIM: usize = 4096;

#[derive(Debug, Clone)]
pub struct BosonicSector {
    dt_dim: usize,
    m: usize,
    cutoff: usize,
    guard: usize,
    states: Vec<Vec<usize>>,
    b: Vec<CMat>,
    j_1p: CMat,
    j_b: CMat,
}

fn occupations(modes: usize, total: usize) -> Vec<Vec<usize>> {
    if modes == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in occupations(modes - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl BosonicSector {
    pub fn new(dt_dim: usize, m: usize, cutoff: usize) -> Result<Self> {
        let modes = dt_dim + 2 * m;
        if cutoff < 2 {
            return Err(BrstError::Size(format!("cutoff {cutoff} below 2")));
        }
        if modes > MAX_ONE_PARTICLE {
            return Err(BrstError::Size(format!("one-particle dimension {modes} above {MAX_ONE_PARTICLE}")));
        }
        let states: Vec<Vec<usize>> = (0..=cutoff).flat_map(|n| occupations(modes, n)).collect();
        let dim = states.len();
        if dim > MAX_FOCK_DIM {
            return Err(BrstError::Size(format!("truncated Fock dimension {dim} above {MAX_FOCK_DIM}")));
        }
        let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();

        let b = (0..modes)
            .map(|k| {
                let mut a = CMat::zeros(dim, dim);
                for (i, s) in states.iter().enumerate().filter(|(_, s)| s[k] > 0) {
                    let mut t = s.clone();
                    t[k] -= 1;
                    a[(index[t.as_slice()], i)] = c((s[k] as f64).sqrt(), 0.0);
                }
                a
            })
            .collect();

        let swap = |k: usize| match k {
            k if k < dt_dim => k,
            k if k < dt_dim + m => k + m,
            k => k - m,
        };
        let mut j_1p = CMat::zeros(modes, modes);
        for k in 0..modes {
            j_1p[(swap(k), k)] = ONE;
        }
        let mut j_b = CMat::zeros(dim, dim);
        for (i, s) in states.iter().enumerate() {
            let mut t = vec![0; modes];
            for k in 0..modes {
                t[swap(k)] = s[k];
            }
            j_b[(index[t.as_slice()], i)] = ONE;
        }

        Ok(BosonicSector { dt_dim, m, cutoff, guard: 1, states, b, j_1p, j_b })
    }

    pub fn dt_dim(&self) -> usize {
        self.dt_dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    /// Highest particle number at which truncation-sensitive identities hold.
    pub fn guard_level(&self) -> usize {
        self.cutoff - self.guard
    }

    pub fn one_particle_dim(&self) -> usize {
        self.dt_dim + 2 * self.m
    }

    pub fn fock_dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<usize>] {
        &self.states
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.states[i].iter().sum()
    }

    pub fn j_1p(&self) -> &CMat {
        &self.j_1p
    }

    pub fn j_b(&self) -> &CMat {
        &self.j_b
    }

    pub fn krein(&self) -> KreinSpace {
        KreinSpace::new(self.j_b.clone(), &Tolerance::default()).expect("J_b is a fundamental symmetry")
    }

    pub fn vacuum(&self) -> CVec {
        linalg::basis_vector(self.fock_dim(), 0)
    }

    pub fn mode_annihilator(&self, k: usize) -> Result<&CMat> {
        self.b.get(k).ok_or(BrstError::Index { index: k, len: self.b.len() })
    }

    pub fn unit(&self, k: usize) -> CVec {
        linalg::basis_vector(self.one_particle_dim(), k)
    }

    pub fn d1(&self, j: usize) -> CVec {
        self.unit(self.dt_dim + j)
    }

    pub fn d2(&self, j: usize) -> CVec {
        self.unit(self.dt_dim + self.m + j)
    }

    /// Hilbert annihilator `b(g) = sum conj(g_k) b_k`.
    pub fn annihilate(&self, g: &CVec) -> CMat {
        let d = self.fock_dim();
        self.b.iter().zip(g.iter()).fold(CMat::zeros(d, d), |acc, (b, gk)| acc + b * gk.conj())
    }

    /// Krein annihilator `a(g) = b(Jg)`.
    pub fn krein_annihilator(&self, g: &CVec) -> CMat {
        self.annihilate(&(&self.j_1p * g))
    }

    /// `A(g) = (a(g) + a(Jg)*) / sqrt 2`.
    pub fn field(&self, g: &CVec) -> CMat {
        (self.krein_annihilator(g) + self.annihilate(g).adjoint()).scale(FRAC_1_SQRT_2)
    }

    /// `Im <<f, g>>` for the one-particle Krein form.
    pub fn symplectic(&self, f: &CVec, g: &CVec) -> f64 {
        f.dotc(&(&self.j_1p * g)).im
    }

    pub fn guard_indices(&self) -> Vec<usize> {
        (0..self.fock_dim()).filter(|&i| self.particle_number(i) <= self.guard_level()).collect()
    }

    /// Columns are the basis vectors of the guard subspace.
    pub fn guard_isometry(&self) -> CMat {
        selection(self.fock_dim(), &self.guard_indices())
    }

    /// `Gamma(P_t)`: keeps states without `D_1` or `D_2` quanta.
    pub fn vacuum_sector_projection(&self) -> CMat {
        let keep: Vec<f64> = self
            .states
            .iter()
            .map(|s| if s[self.dt_dim..].iter().all(|&n| n == 0) { 1.0 } else { 0.0 })
            .collect();
        linalg::from_real_diag(&keep)
    }
}

/// `n x k` matrix whose columns are the unit vectors at `indices`.
pub fn selection(n: usize, indices: &[usize]) -> CMat {
    let mut e = CMat::zeros(n, indices.len());
    for (col, &i) in indices.iter().enumerate() {
        e[(i, col)] = ONE;
    }
    e
}

/// Maps the constraint part `D_1 + D_2` of the bosonic one-particle space
/// onto the ghost one-particle space: `J f_j` to ghost mode `j`, `f_j` to
/// ghost mode `m + j`.
fn to_ghost(sector: &BosonicSector, g: &CVec) -> CVec {
    let (dt, m) = (sector.dt_dim, sector.m);
    let mut out = CVec::zeros(2 * m);
    for j in 0..m {
        out[j] = g[dt + m + j];
        out[m + j] = g[dt + j];
    }
    out
}

#[derive(Debug, Clone)]
pub struct KoComplex {
    pub sector: BosonicSector,
    pub ghosts: GhostRep,
    /// Charge on the whole truncated space.
    pub complex: BrstComplex,
}

pub fn build_ko_abelian_q(sector: &BosonicSector, ghosts: &GhostRep) -> Result<KoComplex> {
    let basis = linalg::identity(sector.m());
    build_ko_abelian_q_with_basis(sector, ghosts, &basis)
}

/// As [`build_ko_abelian_q`] with `f_j = sum_k basis[(k, j)] e_k` for an
/// orthonormal basis of `D_1`.
pub fn build_ko_abelian_q_with_basis(sector: &BosonicSector, ghosts: &GhostRep, basis: &CMat) -> Result<KoComplex> {
    let m = sector.m();
    if ghosts.m() != m || m == 0 {
        return Err(BrstError::Shape(format!("{} ghost pairs for {m} constraint pairs", ghosts.m())));
    }
    if basis.shape() != (m, m) {
        return Err(BrstError::Shape("D_1 basis must be m x m".into()));
    }
    let n = sector.one_particle_dim();
    let dim = sector.fock_dim() * ghosts.fock_dim();
    let mut q = CMat::zeros(dim, dim);
    for j in 0..m {
        let mut f = CVec::zeros(n);
        f.rows_mut(sector.dt_dim, m).copy_from(&basis.column(j));
        let jf = sector.j_1p() * &f;
        // a*(Jf) (x) c(Jf) + a(f) (x) c*(f)
        let a_jf_star = sector.krein_annihilator(&jf).adjoint();
        let a_f = sector.krein_annihilator(&f);
        q += kron(&a_jf_star, &ghosts.annihilate(&to_ghost(sector, &jf)));
        q += kron(&a_f, &ghosts.annihilate(&to_ghost(sector, &f)).adjoint());
    }
    let id_b = linalg::identity(sector.fock_dim());
    let complex = BrstComplex {
        q,
        j_t: kron(sector.j_b(), ghosts.j_g()),
        grading: kron(&id_b, ghosts.parity()),
        g_total: kron(&id_b, ghosts.number()),
        layout: Layout::KoAbelian { boson_dim: sector.fock_dim(), ghost_dim: ghosts.fock_dim() },
    };
    Ok(KoComplex { sector: sector.clone(), ghosts: ghosts.clone(), complex })
}

impl KoComplex {
    fn guard_isometry(&self) -> CMat {
        kron(&self.sector.guard_isometry(), &linalg::identity(self.ghosts.fock_dim()))
    }

    fn boson_plus_ghost(&self, i: usize) -> usize {
        let gd = self.ghosts.fock_dim();
        self.sector.particle_number(i / gd) + (i % gd).count_ones() as usize
    }

    pub fn guard_checks(&self, tol: &Tolerance) -> Vec<Check> {
        let e = self.guard_isometry();
        let q = &self.complex.q;
        let qn = linalg::op_norm(q);
        let j = &self.complex.j_t;
        vec![
            Check::at_most("guard_nilpotent", relative(linalg::op_norm(&(q * q * &e)), qn * qn), tol.abs),
            Check::at_most(
                "guard_krein_symmetric",
                relative(linalg::op_norm(&((q - j * q.adjoint() * j) * &e)), qn),
                tol.abs,
            ),
            Check::at_most("vacuum_annihilated", (q * linalg::basis_vector(q.nrows(), 0)).norm(), tol.abs),
            Check::at_most("laplacian_number_form", self.number_form_residual(), tol.abs),
        ]
    }

    /// `|(Delta - N) E_guard| / |Delta E_guard|` with `N` the constraint-boson
    /// plus ghost number operator.
    pub fn number_form_residual(&self) -> f64 {
        let e = self.guard_isometry();
        let delta = delta_operator(&self.complex);
        let (s, g) = (&self.sector, &self.ghosts);
        let bd = s.fock_dim();
        let mut number = CMat::zeros(bd, bd);
        for k in s.dt_dim()..s.one_particle_dim() {
            let b = &s.b[k];
            number += b.adjoint() * b;
        }
        let ghost_number = g.annihilators().iter().fold(CMat::zeros(g.fock_dim(), g.fock_dim()), |acc, c| {
            acc + c.adjoint() * c
        });
        let n = kron(&number, &linalg::identity(g.fock_dim())) + kron(&linalg::identity(bd), &ghost_number);
        let de = &delta * &e;
        relative(linalg::op_norm(&(de - n * &e)), linalg::op_norm(&(&delta * &e)))
    }

    /// `ker Delta` inside the guard subspace, as orthonormal columns of the
    /// total space.
    pub fn kernel_on_guard(&self, tol: &Tolerance) -> CMat {
        let e = self.guard_isometry();
        let coeffs = linalg::kernel_basis(&(delta_operator(&self.complex) * &e), tol);
        e * coeffs
    }

    /// Span of `D_t`-only states up to `level` tensored with the ghost vacuum.
    pub fn matter_vacuum_states(&self, level: usize) -> CMat {
        let s = &self.sector;
        let gd = self.ghosts.fock_dim();
        let idx: Vec<usize> = (0..s.fock_dim())
            .filter(|&i| s.particle_number(i) <= level && s.states[i][s.dt_dim..].iter().all(|&n| n == 0))
            .map(|i| i * gd)
            .collect();
        selection(s.fock_dim() * gd, &idx)
    }

    /// Indices of the subspace with boson plus ghost number at most `level`.
    /// The charge conserves that number, so on this subspace it equals the
    /// untruncated charge and is exactly nilpotent.
    pub fn conserved_indices(&self, level: usize) -> Vec<usize> {
        (0..self.complex.total_dim()).filter(|&i| self.boson_plus_ghost(i) <= level).collect()
    }

    /// The complex restricted to boson plus ghost number `<= guard level`.
    pub fn conserved_complex(&self) -> (BrstComplex, Vec<usize>) {
        let level = self.sector.guard_level();
        let idx = self.conserved_indices(level);
        let pick = |a: &CMat| a.select_rows(&idx).select_columns(&idx);
        let cplx = BrstComplex {
            q: pick(&self.complex.q),
            j_t: pick(&self.complex.j_t),
            grading: pick(&self.complex.grading),
            g_total: pick(&self.complex.g_total),
            layout: Layout::KoConserved {
                level,
                boson_dim: self.sector.fock_dim(),
                ghost_dim: self.ghosts.fock_dim(),
            },
        };
        (cplx, idx)
    }

    /// Fields `A(g)` for `g` in `D_t` and `iD_t`, restricted to the conserved
    /// subspace with the given indices.
    pub fn matter_fields(&self, idx: &[usize]) -> Vec<CMat> {
        let s = &self.sector;
        let id_g = linalg::identity(self.ghosts.fock_dim());
        (0..s.dt_dim())
            .flat_map(|k| [s.unit(k), s.unit(k) * I])
            .map(|g| kron(&s.field(&g), &id_g).select_rows(idx).select_columns(idx))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuptaBleuler {
    pub h_prime_dim: usize,
    pub neutral_dim: usize,
    pub quotient_dim: usize,
    pub target_dim: usize,
    /// `|<<psi, phi>> - <Gamma(P_t) psi, Gamma(P_t) phi>|` over `H'`.
    pub isometry_residual: f64,
    /// `|Gamma(P_t) H''|`.
    pub neutral_residual: f64,
    /// `Gamma(P_t) H'` against the truncated Fock space over `D_t`.
    pub onto_residual: f64,
}

/// `H' = /\ ker a(f)` over `f` in `D_1`, its neutral part and the quotient,
/// all inside the guard subspace.
pub fn gupta_bleuler_compare(sector: &BosonicSector, tol: &Tolerance) -> Result<GuptaBleuler> {
    if sector.dt_dim() == 0 {
        return Err(BrstError::InvalidInput("Gupta-Bleuler comparison needs dt_dim >= 1".into()));
    }
    let e = sector.guard_isometry();
    let r = e.ncols();
    let m = sector.m();
    let h_prime = if m == 0 {
        linalg::identity(r)
    } else {
        let mut stacked = CMat::zeros(m * sector.fock_dim(), r);
        for j in 0..m {
            let a = sector.krein_annihilator(&sector.d1(j)) * &e;
            stacked.view_mut((j * sector.fock_dim(), 0), (sector.fock_dim(), r)).copy_from(&a);
        }
        linalg::kernel_basis(&stacked, tol)
    };
    let vecs = &e * &h_prime;
    let gram = vecs.adjoint() * sector.j_b() * &vecs;
    let neutral = linalg::kernel_basis(&gram, tol);
    let neutral_vecs = &vecs * &neutral;

    let pt = sector.vacuum_sector_projection();
    let image = &pt * &vecs;
    let isometry_residual = (image.adjoint() * &image - &gram).norm();
    let neutral_residual = if neutral_vecs.ncols() == 0 { 0.0 } else { (&pt * &neutral_vecs).norm() };
    let target_idx: Vec<usize> = sector
        .guard_indices()
        .into_iter()
        .filter(|&i| sector.states[i][sector.dt_dim..].iter().all(|&n| n == 0))
        .collect();
    let target = selection(sector.fock_dim(), &target_idx);
    let onto_residual = linalg::subspace_distance(&linalg::range_basis(&image, tol), &target);

    Ok(GuptaBleuler {
        h_prime_dim: h_prime.ncols(),
        neutral_dim: neutral.ncols(),
        quotient_dim: h_prime.ncols() - neutral.ncols(),
        target_dim: target_idx.len(),
        isometry_residual,
        neutral_residual,
        onto_residual,
    })
}

#[derive(Debug, Clone)]
pub struct CombinedComplex {
    pub complex: BrstComplex,
    pub sector: BosonicSector,
    pub ghosts: GhostRep,
    pub matter_dim: usize,
}

pub fn build_combined_q(sys: &ConstraintSystem, sector: &BosonicSector, ghosts: &GhostRep) -> Result<CombinedComplex> {
    if !sys.is_abelian() {
        return Err(BrstError::Unsupported("combined charge needs abelian constraints".into()));
    }
    let m = sys.n();
    if sector.m() != m || ghosts.m() != m {
        return Err(BrstError::Shape(format!(
            "{m} constraints, {} boson pairs, {} ghost pairs",
            sector.m(),
            ghosts.m()
        )));
    }
    if sector.dt_dim() != 0 {
        return Err(BrstError::Shape("combined charge expects dt_dim = 0".into()));
    }
    let h0 = sys.h0_dim();
    let (bd, gd) = (sector.fock_dim(), ghosts.fock_dim());
    let (id0, id_b) = (linalg::identity(h0), linalg::identity(bd));
    let mut q = CMat::zeros(h0 * bd * gd, h0 * bd * gd);
    for (j, g) in sys.constraints().iter().enumerate() {
        let f = sector.d1(j);
        let jf = sector.j_1p() * &f;
        for phase in [ONE, I] {
            let matter = kron(g, &id_b) + kron(&id0, &sector.field(&(&f * phase))).scale(SQRT_2);
            q += kron(&matter, &ghosts.clifford(&to_ghost(sector, &(&jf * phase))));
        }
    }
    let complex = BrstComplex {
        q,
        j_t: kron(&kron(&id0, sector.j_b()), ghosts.j_g()),
        grading: kron(&kron(&id0, &id_b), ghosts.parity()),
        g_total: kron(&kron(&id0, &id_b), ghosts.number()),
        layout: Layout::Combined { matter_dim: h0, boson_dim: bd, ghost_dim: gd },
    };
    Ok(CombinedComplex { complex, sector: sector.clone(), ghosts: ghosts.clone(), matter_dim: h0 })
}

impl CombinedComplex {
    pub fn guard_isometry(&self) -> CMat {
        kron(
            &kron(&linalg::identity(self.matter_dim), &self.sector.guard_isometry()),
            &linalg::identity(self.ghosts.fock_dim()),
        )
    }

    pub fn guard_checks(&self, tol: &Tolerance) -> Vec<Check> {
        let e = self.guard_isometry();
        let q = &self.complex.q;
        let qn = linalg::op_norm(q);
        let j = &self.complex.j_t;
        let g = &self.complex.grading;
        vec![
            Check::at_most("guard_nilpotent", relative(linalg::op_norm(&(q * q * &e)), qn * qn), tol.abs),
            Check::at_most(
                "guard_krein_symmetric",
                relative(linalg::op_norm(&((q - j * q.adjoint() * j) * &e)), qn),
                tol.abs,
            ),
            Check::at_most(
                "ghost_number_one",
                relative(linalg::op_norm(&(linalg::commutator(&self.complex.g_total, q) - q)), qn),
                tol.abs,
            ),
            Check::at_most("odd", relative(linalg::op_norm(&(g * q * g + q)), qn), tol.abs),
        ]
    }

    pub fn kernel_on_guard(&self, tol: &Tolerance) -> CMat {
        let e = self.guard_isometry();
        let coeffs = linalg::kernel_basis(&(delta_operator(&self.complex) * &e), tol);
        e * coeffs
    }

    /// `(common kernel of the constraints) (x) Omega_b (x) Omega_g`.
    pub fn expected_kernel(&self, sys: &ConstraintSystem, tol: &Tolerance) -> CMat {
        let ker = linalg::kernel_basis(&sys.sum_of_squares(), tol);
        let vac_b = CMat::from_column_slice(self.sector.fock_dim(), 1, self.sector.vacuum().as_slice());
        let vac_g = CMat::from_column_slice(self.ghosts.fock_dim(), 1, self.ghosts.vacuum().as_slice());
        kron(&kron(&ker, &vac_b), &vac_g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderKernel {
    pub combined_dim: usize,
    pub split_dim: usize,
    pub residual: f64,
    pub holds: bool,
}

/// Compares `ker(G (x) 1 + 1 (x) a(g))` with `ker(G (x) 1) /\ ker(1 (x) a(g))`
/// on the guard subspace of matter (x) boson.
pub fn ladder_kernel_check(g: &CMat, sector: &BosonicSector, vec_g: &CVec, tol: &Tolerance) -> Result<LadderKernel> {
    let skew = (g - g.adjoint()).norm();
    if skew > tol.subspace() * g.norm().max(1.0) {
        return Err(BrstError::NotHermitian { residual: skew });
    }
    let h0 = g.nrows();
    let e = kron(&linalg::identity(h0), &sector.guard_isometry());
    let gm = kron(g, &linalg::identity(sector.fock_dim())) * &e;
    let am = kron(&linalg::identity(h0), &sector.krein_annihilator(vec_g)) * &e;
    let combined = linalg::kernel_basis(&(&gm + &am), tol);
    let mut stacked = CMat::zeros(2 * gm.nrows(), e.ncols());
    stacked.view_mut((0, 0), gm.shape()).copy_from(&gm);
    stacked.view_mut((gm.nrows(), 0), am.shape()).copy_from(&am);
    let split = linalg::kernel_basis(&stacked, tol);
    let residual = linalg::subspace_distance(&combined, &split);
    Ok(LadderKernel {
        combined_dim: combined.ncols(),
        split_dim: split.ncols(),
        residual,
        holds: residual <= tol.subspace(),
    })
}
