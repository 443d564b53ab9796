//! Fermionic ghosts on a `2m`-mode Fock space.
//!
//! Modes `0..m` carry the ghost half of the one-particle space and modes
//! `m..2m` its image under the one-particle symmetry, which swaps mode `j`
//! with mode `m + j`. Jordan–Wigner signs put mode 0 outermost; mode `k`
//! lives in bit `2m - 1 - k` of a basis index.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{BrstError, Result};
use num_complex::Complex64;

use crate::linalg::{self, c, CMat, CVec, KreinSpace, Tolerance, ONE, ZERO};
use crate::subspace::OperatorSubspace;

const MAX_FULL_PAIRS: usize = 5;
const MAX_BEREZIN_PAIRS: usize = 6;

#[derive(Debug, Clone)]
pub struct GhostRep {
    m: usize,
    annihilators: Vec<CMat>,
    j_g: CMat,
    number: CMat,
    parity: CMat,
}

/// Bit-level actions on Fock basis vectors, shared by the dense and the
/// vector-only constructions.
#[derive(Debug, Clone, Copy)]
struct Modes {
    count: usize,
}

impl Modes {
    fn bit(&self, k: usize) -> usize {
        1 << (self.count - 1 - k)
    }

    /// Sign from the occupied modes strictly before mode `k`.
    fn sign(&self, s: usize, k: usize) -> f64 {
        if (s >> (self.count - k)).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn annihilate(&self, k: usize, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for (s, z) in v.iter().enumerate() {
            if s & self.bit(k) != 0 && *z != ZERO {
                out[s ^ self.bit(k)] += z * self.sign(s, k);
            }
        }
        out
    }

    fn create(&self, k: usize, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for (s, z) in v.iter().enumerate() {
            if s & self.bit(k) == 0 && *z != ZERO {
                out[s | self.bit(k)] += z * self.sign(s, k);
            }
        }
        out
    }

    /// Image of basis state `s` under the second-quantized mode swap
    /// `k -> (k + half) mod count`, as `(target, sign)`.
    fn swap_state(&self, s: usize) -> (usize, f64) {
        let half = self.count / 2;
        let occupied: Vec<usize> = (0..self.count).filter(|&k| s & self.bit(k) != 0).collect();
        let (mut target, mut sign) = (0usize, 1.0);
        for &k in occupied.iter().rev() {
            let t = (k + half) % self.count;
            sign *= self.sign(target, t);
            target |= self.bit(t);
        }
        (target, sign)
    }

    fn swap(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for (s, z) in v.iter().enumerate() {
            let (t, sign) = self.swap_state(s);
            out[t] += z * sign;
        }
        out
    }

    fn eta(&self, j: usize, v: &CVec) -> CVec {
        (self.annihilate(j, v) + self.create(self.count / 2 + j, v)).scale(FRAC_1_SQRT_2)
    }

    fn rho(&self, j: usize, v: &CVec) -> CVec {
        (self.annihilate(self.count / 2 + j, v) + self.create(j, v)).scale(FRAC_1_SQRT_2)
    }
}

impl GhostRep {
    pub fn new(m: usize) -> Result<Self> {
        if !(1..=MAX_FULL_PAIRS).contains(&m) {
            return Err(BrstError::Size(format!("ghost pairs m={m} outside 1..={MAX_FULL_PAIRS}")));
        }
        let modes = Modes { count: 2 * m };
        let dim = 1usize << modes.count;

        let annihilators = (0..modes.count)
            .map(|k| {
                let mut a = CMat::zeros(dim, dim);
                for s in (0..dim).filter(|s| s & modes.bit(k) != 0) {
                    a[(s ^ modes.bit(k), s)] = c(modes.sign(s, k), 0.0);
                }
                a
            })
            .collect();

        let mut j_g = CMat::zeros(dim, dim);
        for s in 0..dim {
            let (t, sign) = modes.swap_state(s);
            j_g[(t, s)] = c(sign, 0.0);
        }

        let occupied = |s: usize, range: std::ops::Range<usize>| {
            range.filter(|&k| s & modes.bit(k) != 0).count() as f64
        };
        let ghost_number: Vec<f64> =
            (0..dim).map(|s| occupied(s, m..2 * m) - occupied(s, 0..m)).collect();
        let parity: Vec<f64> =
            (0..dim).map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();

        Ok(GhostRep {
            m,
            annihilators,
            j_g,
            number: linalg::from_real_diag(&ghost_number),
            parity: linalg::from_real_diag(&parity),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn fock_dim(&self) -> usize {
        1 << (2 * self.m)
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn vacuum(&self) -> CVec {
        linalg::basis_vector(self.fock_dim(), 0)
    }

    pub fn annihilator(&self, mode: usize) -> Result<&CMat> {
        self.annihilators.get(mode).ok_or(BrstError::Index { index: mode, len: 2 * self.m })
    }

    pub fn annihilators(&self) -> &[CMat] {
        &self.annihilators
    }

    pub fn j_g(&self) -> &CMat {
        &self.j_g
    }

    pub fn number(&self) -> &CMat {
        &self.number
    }

    pub fn parity(&self) -> &CMat {
        &self.parity
    }

    pub fn krein(&self) -> KreinSpace {
        KreinSpace::new(self.j_g.clone(), &Tolerance::default()).expect("J_g is a fundamental symmetry")
    }

    pub fn eta(&self, j: usize) -> Result<CMat> {
        self.check_pair(j)?;
        let a = &self.annihilators;
        Ok((&a[j] + a[self.m + j].adjoint()).scale(FRAC_1_SQRT_2))
    }

    pub fn rho(&self, j: usize) -> Result<CMat> {
        self.check_pair(j)?;
        let a = &self.annihilators;
        Ok((&a[self.m + j] + a[j].adjoint()).scale(FRAC_1_SQRT_2))
    }

    /// One-particle fundamental symmetry on `C^{2m}`.
    pub fn one_particle_j(&self) -> CMat {
        let n = 2 * self.m;
        let mut j = CMat::zeros(n, n);
        for k in 0..self.m {
            j[(k, self.m + k)] = ONE;
            j[(self.m + k, k)] = ONE;
        }
        j
    }

    /// Antilinear annihilator `c(g) = sum conj(g_k) c_k`.
    pub fn annihilate(&self, g: &CVec) -> CMat {
        let d = self.fock_dim();
        self.annihilators
            .iter()
            .zip(g.iter())
            .fold(CMat::zeros(d, d), |acc, (a, gk)| acc + a * gk.conj())
    }

    /// Clifford field `C(g) = (c(g) + c*(Jg)) / sqrt 2`.
    pub fn clifford(&self, g: &CVec) -> CMat {
        let jg = self.one_particle_j() * g;
        (self.annihilate(g) + self.annihilate(&jg).adjoint()).scale(FRAC_1_SQRT_2)
    }

    fn check_pair(&self, j: usize) -> Result<()> {
        if j >= self.m {
            return Err(BrstError::Index { index: j, len: self.m });
        }
        Ok(())
    }
}

/// Span of the `n`-eigenspace of `A -> [G, A]` for Hermitian `G`.
pub fn grade_subspace(g: &CMat, n: i64, tol: &Tolerance) -> Result<OperatorSubspace> {
    let eig = linalg::hermitian_eig(g, tol)?;
    let d = g.nrows();
    let mut mats = Vec::new();
    for a in 0..d {
        for b in 0..d {
            if (eig.values[a] - eig.values[b] - n as f64).abs() < 1e-8 {
                mats.push(eig.vectors.column(a) * eig.vectors.column(b).adjoint());
            }
        }
    }
    Ok(OperatorSubspace::span(d, &mats, tol))
}

/// Component of the matrix algebra on the full ghost space with ghost number `n`.
pub fn ghost_grading(rep: &GhostRep, n: i64, tol: &Tolerance) -> Result<OperatorSubspace> {
    grade_subspace(rep.number(), n, tol)
}

/// Irreducible `2^m`-dimensional representation of the ghost relations,
/// realized inside the full Fock space with a vacuum killed by every
/// conjugate ghost.
#[derive(Debug, Clone)]
pub struct BerezinRep {
    m: usize,
    embed: CMat,
    eta: Vec<CMat>,
    rho: Vec<CMat>,
    g_sf: CMat,
    j_bz: CMat,
    grading: CMat,
}

impl BerezinRep {
    pub fn new(m: usize) -> Result<Self> {
        if !(1..=MAX_BEREZIN_PAIRS).contains(&m) {
            return Err(BrstError::Size(format!("Berezin pairs m={m} outside 1..={MAX_BEREZIN_PAIRS}")));
        }
        let modes = Modes { count: 2 * m };
        let fock_dim = 1usize << modes.count;
        let omega = Self::twisted_vacuum(modes, Self::phase(m));

        let dim = 1usize << m;
        let columns: Vec<CVec> = (0..dim)
            .map(|mask| {
                (0..m).rev().filter(|j| mask & (1 << j) != 0).fold(omega.clone(), |v, j| modes.eta(j, &v))
            })
            .collect();
        let raw = linalg::columns_to_matrix(fock_dim, &columns);
        let embed = linalg::gram_schmidt(&raw, 1e-12);
        if embed.ncols() != dim {
            return Err(BrstError::Shape(format!(
                "Berezin basis degenerate: {} of {dim} vectors independent",
                embed.ncols()
            )));
        }

        let compress = |act: &dyn Fn(&CVec) -> CVec| {
            let image: Vec<CVec> = (0..dim).map(|k| act(&embed.column(k).into_owned())).collect();
            embed.adjoint() * linalg::columns_to_matrix(fock_dim, &image)
        };
        let eta: Vec<CMat> = (0..m).map(|j| compress(&|v| modes.eta(j, v))).collect();
        let rho: Vec<CMat> = (0..m).map(|j| compress(&|v| modes.rho(j, v))).collect();
        let j_bz = compress(&|v| modes.swap(v));
        let mut g_sf = CMat::identity(dim, dim).scale(-(m as f64) / 2.0);
        for j in 0..m {
            g_sf += &eta[j] * &rho[j];
        }
        let signs: Vec<f64> =
            (0..dim).map(|mask: usize| if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();

        Ok(BerezinRep { m, embed, eta, rho, g_sf, j_bz, grading: linalg::from_real_diag(&signs) })
    }

    fn phase(m: usize) -> Complex64 {
        linalg::I.powu((m * (m - 1) / 2) as u32)
    }

    /// `rho_1 ... rho_m (eta_1 ... eta_m + phase) Omega`, normalized.
    fn twisted_vacuum(modes: Modes, phase: Complex64) -> CVec {
        let m = modes.count / 2;
        let omega = linalg::basis_vector(1 << modes.count, 0);
        let top = (0..m).rev().fold(omega.clone(), |v, j| modes.eta(j, &v));
        let v = (0..m).rev().fold(top + omega * phase, |v, j| modes.rho(j, &v));
        let n = v.norm();
        v / c(n, 0.0)
    }

    /// The companion vector built with the opposite phase; it is orthogonal
    /// to the whole Berezin subspace.
    pub fn complement_vector(&self) -> CVec {
        Self::twisted_vacuum(Modes { count: 2 * self.m }, -Self::phase(self.m))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        1 << self.m
    }

    pub fn omega_sf_index(&self) -> usize {
        0
    }

    pub fn omega_sf(&self) -> CVec {
        linalg::basis_vector(self.dim(), 0)
    }

    pub fn embed(&self) -> &CMat {
        &self.embed
    }

    pub fn eta(&self, j: usize) -> Result<&CMat> {
        self.eta.get(j).ok_or(BrstError::Index { index: j, len: self.m })
    }

    pub fn rho(&self, j: usize) -> Result<&CMat> {
        self.rho.get(j).ok_or(BrstError::Index { index: j, len: self.m })
    }

    pub fn g_sf(&self) -> &CMat {
        &self.g_sf
    }

    pub fn j_bz(&self) -> &CMat {
        &self.j_bz
    }

    /// `(-1)^{G_sf + m/2}`: the Fock parity does not preserve this subspace
    /// when `m` is odd, so the grading is counted by ghost occupation instead.
    pub fn grading(&self) -> &CMat {
        &self.grading
    }

    /// Commutant of `{eta_j, rho_j}` on the Berezin space.
    pub fn commutant_dim(&self, tol: &Tolerance) -> usize {
        let gens: Vec<CMat> = self.eta.iter().chain(self.rho.iter()).cloned().collect();
        crate::dirac::commutant(&gens, tol).map(|s| s.len()).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GhostKind {
    Full,
    Berezin,
}

impl GhostKind {
    /// Berezin for an odd number of constraints, the full space otherwise.
    pub fn default_for(n: usize) -> Self {
        if n % 2 == 1 {
            GhostKind::Berezin
        } else {
            GhostKind::Full
        }
    }
}

/// Either ghost representation, behind one interface.
#[derive(Debug, Clone)]
pub enum Ghosts {
    Full { rep: GhostRep, eta: Vec<CMat>, rho: Vec<CMat> },
    Berezin(BerezinRep),
}

impl Ghosts {
    pub fn build(kind: GhostKind, m: usize) -> Result<Self> {
        match kind {
            GhostKind::Full => Self::full(GhostRep::new(m)?),
            GhostKind::Berezin => Ok(Ghosts::Berezin(BerezinRep::new(m)?)),
        }
    }

    pub fn full(rep: GhostRep) -> Result<Self> {
        let eta = (0..rep.m()).map(|j| rep.eta(j)).collect::<Result<_>>()?;
        let rho = (0..rep.m()).map(|j| rep.rho(j)).collect::<Result<_>>()?;
        Ok(Ghosts::Full { rep, eta, rho })
    }

    pub fn kind(&self) -> GhostKind {
        match self {
            Ghosts::Full { .. } => GhostKind::Full,
            Ghosts::Berezin(_) => GhostKind::Berezin,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Ghosts::Full { rep, .. } => rep.m(),
            Ghosts::Berezin(b) => b.m(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Ghosts::Full { rep, .. } => rep.fock_dim(),
            Ghosts::Berezin(b) => b.dim(),
        }
    }

    pub fn eta(&self, j: usize) -> Result<&CMat> {
        match self {
            Ghosts::Full { eta, rep, .. } => eta.get(j).ok_or(BrstError::Index { index: j, len: rep.m() }),
            Ghosts::Berezin(b) => b.eta(j),
        }
    }

    pub fn rho(&self, j: usize) -> Result<&CMat> {
        match self {
            Ghosts::Full { rho, rep, .. } => rho.get(j).ok_or(BrstError::Index { index: j, len: rep.m() }),
            Ghosts::Berezin(b) => b.rho(j),
        }
    }

    pub fn j(&self) -> &CMat {
        match self {
            Ghosts::Full { rep, .. } => rep.j_g(),
            Ghosts::Berezin(b) => b.j_bz(),
        }
    }

    pub fn number(&self) -> &CMat {
        match self {
            Ghosts::Full { rep, .. } => rep.number(),
            Ghosts::Berezin(b) => b.g_sf(),
        }
    }

    pub fn grading(&self) -> &CMat {
        match self {
            Ghosts::Full { rep, .. } => rep.parity(),
            Ghosts::Berezin(b) => b.grading(),
        }
    }

    /// The distinguished vacuum: Fock `Omega` or `Omega_sf`.
    pub fn vacuum(&self) -> CVec {
        linalg::basis_vector(self.dim(), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{anticommutator, commutator, identity};

    const TOL: f64 = 1e-12;

    #[test]
    fn car_relations_full() {
        for m in 1..=2 {
            let rep = GhostRep::new(m).unwrap();
            let d = rep.fock_dim();
            for i in 0..2 * m {
                for j in 0..2 * m {
                    let (a, b) = (rep.annihilator(i).unwrap(), rep.annihilator(j).unwrap());
                    let delta = if i == j { identity(d) } else { CMat::zeros(d, d) };
                    assert!((anticommutator(a, &b.adjoint()) - delta).norm() < TOL);
                    assert!(anticommutator(a, b).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn symmetry_and_number() {
        let rep = GhostRep::new(2).unwrap();
        let (j, g) = (rep.j_g(), rep.number());
        assert!((j * j - identity(16)).norm() < TOL);
        assert!((j - j.adjoint()).norm() < TOL);
        assert!((j * rep.vacuum() - rep.vacuum()).norm() < TOL);
        assert!((g + j * g * j).norm() < TOL);
        assert!((g * rep.vacuum()).norm() < TOL);
        let jop = rep.one_particle_j();
        for k in 0..4 {
            let swapped = rep.annihilate(&jop.column(k).into_owned());
            assert!((j * rep.annihilator(k).unwrap() * j - swapped).norm() < TOL);
            let p = rep.parity();
            assert!((p * rep.annihilator(k).unwrap() * p + rep.annihilator(k).unwrap()).norm() < TOL);
        }
    }

    #[test]
    fn single_pair_spectrum() {
        let rep = GhostRep::new(1).unwrap();
        let ev = linalg::hermitian_eig(rep.number(), &Tolerance::default()).unwrap().values;
        assert_eq!(ev, vec![-1.0, 0.0, 0.0, 1.0]);
        assert!(GhostRep::new(0).is_err() && GhostRep::new(6).is_err());
    }

    #[test]
    fn eta_rho_relations() {
        let rep = GhostRep::new(2).unwrap();
        let k = rep.krein();
        for j in 0..2 {
            let (e, r) = (rep.eta(j).unwrap(), rep.rho(j).unwrap());
            assert!((linalg::krein_adjoint(&e, &k).unwrap() - &e).norm() < TOL);
            assert!((linalg::krein_adjoint(&r, &k).unwrap() - &r).norm() < TOL);
            assert!((anticommutator(&e, &r) - identity(16)).norm() < TOL);
            assert!((&e * &e).norm() < TOL);
            assert!((commutator(rep.number(), &e) - &e).norm() < TOL);
            assert!((commutator(rep.number(), &r) + &r).norm() < TOL);
        }
        assert!(anticommutator(&rep.eta(0).unwrap(), &rep.eta(1).unwrap()).norm() < TOL);
        assert!(anticommutator(&rep.eta(0).unwrap(), &rep.rho(1).unwrap()).norm() < TOL);
        assert!(rep.eta(2).is_err());
    }

    #[test]
    fn grading_dimensions_single_pair() {
        let tol = Tolerance::default();
        let rep = GhostRep::new(1).unwrap();
        // ad(G) on the 16-dim matrix space: the n-component has dimension
        // sum over eigenvalue pairs with difference n of the multiplicity products
        let spectrum = [0i64, 1, -1, 0];
        let oracle = |n: i64| spectrum.iter().flat_map(|a| spectrum.iter().map(move |b| a - b)).filter(|&d| d == n).count();
        for n in -2..=2 {
            assert_eq!(ghost_grading(&rep, n, &tol).unwrap().len(), oracle(n));
        }
        assert_eq!(oracle(0), 6);
        assert_eq!(ghost_grading(&rep, 3, &tol).unwrap().len(), 0);
        let total: usize = (-2..=2).map(|n| ghost_grading(&rep, n, &tol).unwrap().len()).sum();
        assert_eq!(total, 16);
    }

    #[test]
    fn berezin_basics() {
        let tol = Tolerance::default();
        for m in 1..=3 {
            let bz = BerezinRep::new(m).unwrap();
            let d = bz.dim();
            assert_eq!(d, 1 << m);
            let om = bz.omega_sf();
            for j in 0..m {
                assert!((bz.rho(j).unwrap() * &om).norm() < TOL);
                for k in 0..m {
                    let delta = if j == k { identity(d) } else { CMat::zeros(d, d) };
                    assert!((anticommutator(bz.eta(j).unwrap(), bz.rho(k).unwrap()) - delta).norm() < TOL);
                    assert!(anticommutator(bz.eta(j).unwrap(), bz.eta(k).unwrap()).norm() < TOL);
                }
                let g = bz.grading();
                assert!((g * bz.eta(j).unwrap() * g + bz.eta(j).unwrap()).norm() < TOL);
            }
            assert!((bz.g_sf() * &om + om.clone() * c(m as f64 / 2.0, 0.0)).norm() < TOL);
            assert!(om.dotc(&(bz.j_bz() * &om)).norm() < TOL);
            let ev = linalg::hermitian_eig(bz.g_sf(), &tol).unwrap().values;
            assert!((ev[0] + m as f64 / 2.0).abs() < 1e-10 && (ev[d - 1] - m as f64 / 2.0).abs() < 1e-10);
        }
        assert!(BerezinRep::new(0).is_err());
    }

    #[test]
    fn berezin_subspace_invariant_under_j() {
        let bz = BerezinRep::new(2).unwrap();
        let full = GhostRep::new(2).unwrap();
        let e = bz.embed();
        let je = full.j_g() * e;
        assert!((e * (e.adjoint() * &je) - &je).norm() < TOL);
    }
}
