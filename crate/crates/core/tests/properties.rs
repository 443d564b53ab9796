//! Randomized invariants. Every case draws its matrices from a ChaCha stream
//! seeded by proptest, so failures shrink to a single reproducible seed.

use brstlab_core::bose::{build_ko_abelian_q, build_ko_abelian_q_with_basis, ladder_kernel_check, BosonicSector};
use brstlab_core::cohomology::{dsp_decompose, ker_delta, phi_s, state_condition_check, superderivation_matrix};
use brstlab_core::ghost::ghost_grading;
use brstlab_core::hamiltonian::{build_hamiltonian_q, delta_operator};
use brstlab_core::linalg::{
    self, anticommutator, c, commutator, from_real_diag, identity, CMat, CVec, KreinSpace, Tolerance,
};
use brstlab_core::{BerezinRep, BrstComplex, ConstraintSystem, GhostKind, GhostRep, Ghosts};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(r: &mut ChaCha8Rng) -> Complex64 {
    c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
}

fn random_mat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| entry(r))
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| entry(r))
}

fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> CMat {
    random_mat(r, n, n).qr().q()
}

/// `U diag(+-1) U*` with at least one sign of each kind when `n > 1`.
fn random_krein(r: &mut ChaCha8Rng, n: usize) -> KreinSpace {
    let neg = if n > 1 { r.random_range(1..n) } else { 0 };
    let signs: Vec<f64> = (0..n).map(|i| if i < neg { -1.0 } else { 1.0 }).collect();
    let u = random_unitary(r, n);
    KreinSpace::new(&u * from_real_diag(&signs) * u.adjoint(), &tol()).unwrap()
}

/// Commuting Hermitian constraints with small integer spectra, so ranks are
/// well separated from zero.
fn random_abelian(r: &mut ChaCha8Rng, h0: usize, n: usize) -> Option<ConstraintSystem> {
    let u = random_unitary(r, h0);
    let constraints = (0..n)
        .map(|_| {
            let d: Vec<f64> = (0..h0).map(|_| r.random_range(-1i32..=1) as f64).collect();
            &u * from_real_diag(&d) * u.adjoint()
        })
        .collect();
    ConstraintSystem::new(h0, constraints, None, &tol()).ok()
}

fn hamiltonian(sys: &ConstraintSystem, kind: GhostKind) -> BrstComplex {
    let ghosts = Ghosts::build(kind, sys.n()).unwrap();
    build_hamiltonian_q(sys, &ghosts, &tol()).unwrap()
}

fn norm(a: &CMat) -> f64 {
    linalg::op_norm(a)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn krein_adjoint_is_an_involution(seed: u64, n in 1usize..6) {
        let mut r = rng(seed);
        let k = random_krein(&mut r, n);
        let a = random_mat(&mut r, n, n);
        let a_dag = linalg::krein_adjoint(&a, &k).unwrap();
        prop_assert!(norm(&(linalg::krein_adjoint(&a_dag, &k).unwrap() - &a)) < 1e-12);
        let (x, y) = (random_vec(&mut r, n), random_vec(&mut r, n));
        let lhs = k.form(&x, &(&a * &y));
        let rhs = k.form(&(&a_dag * &x), &y);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn range_and_adjoint_kernel_are_complementary(seed: u64, n in 1usize..7, rank_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let rank = (rank_frac * n as f64) as usize;
        let a = random_mat(&mut r, n, rank) * random_mat(&mut r, rank, n);
        let p = linalg::range_projection(&a, &tol());
        let k = linalg::projector(&linalg::kernel_basis(&a.adjoint(), &tol()));
        prop_assert!(norm(&(p + k - identity(n))) < 1e-9);
    }

    #[test]
    fn dsp_of_krein_symmetric_block_charge(seed: u64, n in 1usize..5, kernel in 0usize..3) {
        // Q = [[0, A], [0, 0]] on L + L with J the swap is Krein symmetric
        // exactly when A is Hermitian.
        let mut r = rng(seed);
        let kernel = kernel.min(n);
        let u = random_unitary(&mut r, n);
        let d: Vec<f64> = (0..n).map(|i| if i < kernel { 0.0 } else { r.random_range(0.5..2.0) }).collect();
        let a = &u * from_real_diag(&d) * u.adjoint();
        let mut q = CMat::zeros(2 * n, 2 * n);
        q.view_mut((0, n), (n, n)).copy_from(&a);
        let mut j = CMat::zeros(2 * n, 2 * n);
        j.view_mut((0, n), (n, n)).copy_from(&identity(n));
        j.view_mut((n, 0), (n, n)).copy_from(&identity(n));
        let k = KreinSpace::new(j, &tol()).unwrap();
        let dsp = dsp_decompose(&q, &k, &tol()).unwrap();
        prop_assert_eq!((dsp.d_d, dsp.d_s, dsp.d_p), (n - kernel, 2 * kernel, n - kernel));
        for check in dsp.checks(&q, &k, &tol()) {
            prop_assert!(check.pass, "{} {:e}", check.name, check.residual);
        }
        let sig = linalg::krein_signature(&dsp.basis_s, &k, &tol()).unwrap();
        prop_assert_eq!(sig, (kernel, kernel, 0));
    }

    #[test]
    fn laplacian_kernel_is_joint_kernel(seed: u64, h0 in 2usize..4, n in 1usize..3) {
        let mut r = rng(seed);
        let sys = random_abelian(&mut r, h0, n);
        prop_assume!(sys.is_some());
        let sys = sys.unwrap();
        let cplx = hamiltonian(&sys, GhostKind::Full);
        let dsp = dsp_decompose(&cplx.q, &cplx.krein(), &tol()).unwrap();
        let lap = linalg::projector(&linalg::kernel_basis(&delta_operator(&cplx), &tol()));
        prop_assert!(norm(&(lap - &dsp.p_s)) < 1e-8);
        prop_assert!(norm(&(&dsp.p_d + &dsp.p_s + &dsp.p_p - identity(cplx.total_dim()))) < 1e-8);
    }

    #[test]
    fn bosonic_fields_satisfy_ccr_on_guard(seed: u64, dt in 0usize..2) {
        let mut r = rng(seed);
        let sector = BosonicSector::new(dt, 1, 3).unwrap();
        let n = sector.one_particle_dim();
        let (f, g) = (random_vec(&mut r, n), random_vec(&mut r, n));
        let e = sector.guard_isometry();
        let lhs = commutator(&sector.field(&f), &sector.field(&g)) * &e;
        let rhs = &e * c(0.0, sector.symplectic(&f, &g));
        prop_assert!(norm(&(lhs - rhs)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn superderivation_squares_to_zero(seed: u64, h0 in 2usize..4, kind_full: bool) {
        let mut r = rng(seed);
        let sys = random_abelian(&mut r, h0, 1).unwrap();
        let cplx = hamiltonian(&sys, if kind_full { GhostKind::Full } else { GhostKind::Berezin });
        let delta = superderivation_matrix(&cplx.q, &cplx.grading, &tol()).unwrap();
        let scale = norm(&cplx.q).max(1.0).powi(2);
        for _ in 0..4 {
            let a = random_mat(&mut r, cplx.total_dim(), cplx.total_dim());
            prop_assert!(norm(&delta.apply(&delta.apply(&a))) <= 1e-12 * scale * norm(&a));
        }
        // delta(Gamma) = 2 Q Gamma, so distinct charges give distinct derivations
        let image = delta.apply(&cplx.grading);
        prop_assert!(norm(&(image - (&cplx.q * &cplx.grading).scale(2.0))) < 1e-12);
    }

    #[test]
    fn compression_is_multiplicative_on_ker_delta(seed: u64, h0 in 2usize..4) {
        let mut r = rng(seed);
        let sys = random_abelian(&mut r, h0, 1).unwrap();
        let cplx = hamiltonian(&sys, GhostKind::Berezin);
        let dsp = dsp_decompose(&cplx.q, &cplx.krein(), &tol()).unwrap();
        let delta = superderivation_matrix(&cplx.q, &cplx.grading, &tol()).unwrap();
        let ker = ker_delta(&delta, None, &tol()).unwrap();
        let mats = ker.matrices();
        let combo = |r: &mut ChaCha8Rng| mats.iter().fold(CMat::zeros(cplx.total_dim(), cplx.total_dim()), |acc, m| acc + m * entry(r));
        for _ in 0..6 {
            let (a, b) = (combo(&mut r), combo(&mut r));
            let lhs = phi_s(&(&a * &b), &dsp);
            let rhs = phi_s(&a, &dsp) * phi_s(&b, &dsp);
            prop_assert!(norm(&(lhs - rhs)) <= 1e-9 * (norm(&a) * norm(&b)).max(1.0));
        }
        // the Krein adjoint of a kernel element stays in the kernel
        let j = &cplx.j_t;
        for m in &mats {
            prop_assert!(ker.distance(&(j * m.adjoint() * j)) < 1e-8);
        }
    }

    #[test]
    fn state_conditions_agree(seed: u64, h0 in 2usize..4) {
        let mut r = rng(seed);
        let sys = random_abelian(&mut r, h0, 1).unwrap();
        let cplx = hamiltonian(&sys, GhostKind::Berezin);
        let dsp = dsp_decompose(&cplx.q, &cplx.krein(), &tol()).unwrap();
        let d = cplx.total_dim();
        prop_assume!(dsp.d_s > 0);
        let physical = {
            let v = &dsp.basis_s * random_vec(&mut r, dsp.d_s);
            let n = v.norm();
            v / c(n, 0.0)
        };
        let sc = state_condition_check(&physical, &cplx, &tol());
        prop_assert!(sc.consistent() && sc.laplacian_zero, "{:?}", sc);
        let generic = {
            let v = random_vec(&mut r, d);
            let n = v.norm();
            v / c(n, 0.0)
        };
        let sc = state_condition_check(&generic, &cplx, &tol());
        prop_assert!(sc.consistent(), "{:?}", sc);
    }

    #[test]
    fn ko_charge_is_independent_of_the_constraint_basis(seed: u64) {
        let mut r = rng(seed);
        let sector = BosonicSector::new(0, 2, 2).unwrap();
        let ghosts = GhostRep::new(2).unwrap();
        let reference = build_ko_abelian_q(&sector, &ghosts).unwrap();
        let rotated = build_ko_abelian_q_with_basis(&sector, &ghosts, &random_unitary(&mut r, 2)).unwrap();
        prop_assert!(norm(&(&reference.complex.q - &rotated.complex.q)) < 1e-12);
    }

    #[test]
    fn ladder_kernel_splits(seed: u64, h0 in 1usize..4) {
        // G has integer spectrum and a(g) lowers the boson number, so a joint
        // kernel vector needs both parts to vanish separately
        let mut r = rng(seed);
        let u = random_unitary(&mut r, h0);
        let d: Vec<f64> = (0..h0).map(|_| r.random_range(0i32..=2) as f64).collect();
        let g = &u * from_real_diag(&d) * u.adjoint();
        let sector = BosonicSector::new(0, 1, 3).unwrap();
        let vec_g = random_vec(&mut r, sector.one_particle_dim());
        let lk = ladder_kernel_check(&g, &sector, &vec_g, &tol()).unwrap();
        prop_assert!(lk.holds, "{:?}", lk);
        prop_assert_eq!(lk.combined_dim, lk.split_dim);
    }
}

#[test]
fn ghost_modes_satisfy_car() {
    for m in 1..=3 {
        let rep = GhostRep::new(m).unwrap();
        let d = rep.fock_dim();
        let cs = rep.annihilators();
        for (i, ci) in cs.iter().enumerate() {
            for (j, cj) in cs.iter().enumerate() {
                let expected = if i == j { identity(d) } else { CMat::zeros(d, d) };
                assert!(norm(&(anticommutator(ci, &cj.adjoint()) - expected)) < 1e-14);
                assert!(norm(&anticommutator(ci, cj)) < 1e-14);
            }
        }
    }
}

#[test]
fn ghost_number_grades_the_whole_algebra() {
    let t = tol();
    for m in 1..=2 {
        let rep = GhostRep::new(m).unwrap();
        let d = rep.fock_dim();
        let mut total = 0;
        for n in -(2 * m as i64)..=(2 * m as i64) {
            total += ghost_grading(&rep, n, &t).unwrap().len();
        }
        assert_eq!(total, d * d, "m = {m}");
    }
}

#[test]
fn adjoints_act_on_ghost_grades() {
    let t = tol();
    for m in 1..=2 {
        let rep = GhostRep::new(m).unwrap();
        let j = rep.j_g();
        for n in -2i64..=2 {
            let grade = ghost_grading(&rep, n, &t).unwrap();
            let opposite = ghost_grading(&rep, -n, &t).unwrap();
            for a in grade.matrices() {
                assert!(opposite.distance(&a.adjoint()) < 1e-10, "Hilbert adjoint, m = {m}, n = {n}");
                assert!(grade.distance(&(j * a.adjoint() * j)) < 1e-10, "Krein adjoint, m = {m}, n = {n}");
            }
        }
    }
}

#[test]
fn berezin_complement_is_orthogonal() {
    for m in 1..=3 {
        let rep = BerezinRep::new(m).unwrap();
        let overlap = rep.embed().adjoint() * rep.complement_vector();
        assert!(overlap.norm() < 1e-12, "m = {m}");
    }
}

#[test]
fn ghost_generator_forces_an_indefinite_form() {
    // A = i(eta rho - rho eta) is Krein self-adjoint with A^2 = -1, so its
    // eigenvalues are +-i and its eigenvectors are null for the Krein form
    let t = tol();
    let rep = GhostRep::new(1).unwrap();
    let (eta, rho) = (rep.eta(0).unwrap(), rep.rho(0).unwrap());
    let a = commutator(&eta, &rho) * c(0.0, 1.0);
    let d = rep.fock_dim();
    let k = rep.krein();
    assert!(norm(&(&a * &a + identity(d))) < 1e-14);
    assert!(norm(&(linalg::krein_adjoint(&a, &k).unwrap() - &a)) < 1e-14);
    let plus_i = linalg::kernel_basis(&(&a - identity(d) * c(0.0, 1.0)), &t);
    assert!(plus_i.ncols() > 0);
    for col in plus_i.column_iter() {
        let v = col.into_owned();
        assert!(k.form(&v, &v).norm() < 1e-12);
    }
    let eig = linalg::hermitian_eig(k.j(), &t).unwrap();
    let v = eig.vectors.column(0).into_owned();
    assert!(eig.values[0] < 0.0 && k.form(&v, &v).re < 0.0);
}
