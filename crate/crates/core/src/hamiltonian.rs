//! Hamiltonian BRST charge for finitely many Hermitian constraints closing
//! under a Lie bracket `[G_a, G_b] = i C[c][a][b] G_c`.

use serde::{Deserialize, Serialize};

use crate::check::{relative, Check};
use crate::error::{BrstError, Result};
use crate::ghost::{GhostKind, Ghosts};
use crate::linalg::{self, c, commutator, kron, CMat, KreinSpace, Tolerance, I};

/// Structure constants indexed `[c][a][b]`.
pub type StructureConstants = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    h0_dim: usize,
    constraints: Vec<CMat>,
    structure: StructureConstants,
}

impl ConstraintSystem {
    pub fn new(
        h0_dim: usize,
        constraints: Vec<CMat>,
        structure: Option<StructureConstants>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = constraints.len();
        if n == 0 {
            return Err(BrstError::InvalidSystem("at least one constraint is required".into()));
        }
        for (a, g) in constraints.iter().enumerate() {
            if g.shape() != (h0_dim, h0_dim) {
                return Err(BrstError::InvalidSystem(format!(
                    "constraint {a} has shape {:?}, expected {h0_dim}x{h0_dim}",
                    g.shape()
                )));
            }
            if !linalg::is_finite(g) {
                return Err(BrstError::InvalidSystem(format!("constraint {a} has non-finite entries")));
            }
            let skew = (g - g.adjoint()).norm();
            if skew > tol.subspace() * g.norm().max(1.0) {
                return Err(BrstError::InvalidSystem(format!("constraint {a} is not Hermitian ({skew:.3e})")));
            }
        }
        let structure = structure.unwrap_or_else(|| vec![vec![vec![0.0; n]; n]; n]);
        if structure.len() != n || structure.iter().any(|s| s.len() != n || s.iter().any(|r| r.len() != n)) {
            return Err(BrstError::InvalidSystem(format!("structure constants must be {n}x{n}x{n}")));
        }
        let sys = ConstraintSystem { h0_dim, constraints, structure };
        sys.validate(tol)?;
        Ok(sys)
    }

    fn validate(&self, tol: &Tolerance) -> Result<()> {
        let n = self.n();
        let cst = &self.structure;
        let bound = tol.subspace();

        // Identically zero constraints are admitted so that the trivial charge
        // can be formed; the rest must be linearly independent.
        let nonzero: Vec<CMat> =
            self.constraints.iter().filter(|g| g.norm() > tol.abs).cloned().collect();
        let span = crate::subspace::OperatorSubspace::span(self.h0_dim, &nonzero, tol);
        if span.len() != nonzero.len() {
            return Err(BrstError::InvalidSystem("constraints are linearly dependent".into()));
        }

        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let v = cst[k][a][b];
                    let anti = [cst[k][b][a], cst[a][k][b], cst[b][a][k]];
                    if anti.iter().any(|&w| (v + w).abs() > bound) {
                        return Err(BrstError::InvalidSystem(format!(
                            "structure constants not totally antisymmetric at [{k}][{a}][{b}]"
                        )));
                    }
                }
                let mut rhs = CMat::zeros(self.h0_dim, self.h0_dim);
                for k in 0..n {
                    rhs += self.constraints[k].scale(cst[k][a][b]);
                }
                let res = (commutator(&self.constraints[a], &self.constraints[b]) - rhs * I).norm();
                if res > bound * self.scale() {
                    return Err(BrstError::InvalidSystem(format!(
                        "[G_{a}, G_{b}] does not match the structure constants (residual {res:.3e})"
                    )));
                }
            }
        }

        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    for e in 0..n {
                        let jac: f64 = (0..n)
                            .map(|d| {
                                cst[d][a][b] * cst[e][d][k]
                                    + cst[d][b][k] * cst[e][d][a]
                                    + cst[d][k][a] * cst[e][d][b]
                            })
                            .sum();
                        if jac.abs() > bound {
                            return Err(BrstError::InvalidSystem(format!(
                                "Jacobi identity fails for ({a},{b},{k}) component {e}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.constraints.iter().map(|g| g.norm()).fold(1.0, f64::max).powi(2)
    }

    pub fn h0_dim(&self) -> usize {
        self.h0_dim
    }

    pub fn n(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[CMat] {
        &self.constraints
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().flatten().flatten().all(|&x| x == 0.0)
    }

    /// `sum_a G_a^2`, whose kernel is the common kernel of the constraints.
    pub fn sum_of_squares(&self) -> CMat {
        self.constraints.iter().fold(CMat::zeros(self.h0_dim, self.h0_dim), |acc, g| acc + g * g)
    }
}

/// Tensor layout of a BRST complex's total space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    Hamiltonian { matter_dim: usize, ghost: GhostKind, ghost_dim: usize },
    KoAbelian { boson_dim: usize, ghost_dim: usize },
    /// The subspace of the KO space with boson plus ghost number at most `level`.
    KoConserved { level: usize, boson_dim: usize, ghost_dim: usize },
    Combined { matter_dim: usize, boson_dim: usize, ghost_dim: usize },
}

impl Layout {
    pub fn ghost_dim(&self) -> usize {
        match *self {
            Layout::Hamiltonian { ghost_dim, .. }
            | Layout::KoAbelian { ghost_dim, .. }
            | Layout::KoConserved { ghost_dim, .. }
            | Layout::Combined { ghost_dim, .. } => ghost_dim,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BrstComplex {
    pub q: CMat,
    pub j_t: CMat,
    pub grading: CMat,
    pub g_total: CMat,
    pub layout: Layout,
}

impl BrstComplex {
    pub fn total_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn krein(&self) -> KreinSpace {
        KreinSpace::new(self.j_t.clone(), &Tolerance::default()).expect("total J is a fundamental symmetry")
    }

    /// `|Q^2| / |Q|^2`.
    pub fn nilpotency_residual(&self) -> f64 {
        let qn = linalg::op_norm(&self.q);
        relative(linalg::op_norm(&(&self.q * &self.q)), qn * qn)
    }

    pub fn invariants(&self, tol: &Tolerance) -> Vec<Check> {
        let q = &self.q;
        let qn = linalg::op_norm(q).max(f64::MIN_POSITIVE);
        let kadj = &self.j_t * q.adjoint() * &self.j_t;
        let g = &self.grading;
        vec![
            Check::at_most("nilpotent", self.nilpotency_residual(), tol.abs),
            Check::at_most("krein_symmetric", relative(linalg::op_norm(&(q - kadj)), qn), tol.abs),
            Check::at_most(
                "ghost_number_one",
                relative(linalg::op_norm(&(commutator(&self.g_total, q) - q)), qn),
                tol.abs,
            ),
            Check::at_most("odd", relative(linalg::op_norm(&(g * q * g + q)), qn), tol.abs),
        ]
    }
}

pub fn build_hamiltonian_q(sys: &ConstraintSystem, ghosts: &Ghosts, tol: &Tolerance) -> Result<BrstComplex> {
    let n = sys.n();
    if ghosts.m() != n {
        return Err(BrstError::Shape(format!("{} ghost pairs for {n} constraints", ghosts.m())));
    }
    let h0 = sys.h0_dim();
    let id0 = linalg::identity(h0);
    let cst = sys.structure();

    let mut q = CMat::zeros(h0 * ghosts.dim(), h0 * ghosts.dim());
    for a in 0..n {
        q += kron(&sys.constraints()[a], ghosts.eta(a)?);
    }
    let mut ghost_term = CMat::zeros(ghosts.dim(), ghosts.dim());
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                let coeff = cst[k][a][b];
                if coeff != 0.0 {
                    ghost_term += (ghosts.eta(a)? * ghosts.eta(b)? * ghosts.rho(k)?).scale(coeff);
                }
            }
        }
    }
    q -= kron(&id0, &ghost_term) * c(0.0, 0.5);

    let cplx = BrstComplex {
        j_t: kron(&id0, ghosts.j()),
        grading: kron(&id0, ghosts.grading()),
        g_total: kron(&id0, ghosts.number()),
        layout: Layout::Hamiltonian { matter_dim: h0, ghost: ghosts.kind(), ghost_dim: ghosts.dim() },
        q,
    };
    let res = cplx.nilpotency_residual();
    if res > tol.abs {
        return Err(BrstError::Closure { residual: res });
    }
    Ok(cplx)
}

/// `QQ* + Q*Q`.
pub fn delta_operator(cplx: &BrstComplex) -> CMat {
    let q = &cplx.q;
    let qs = q.adjoint();
    q * &qs + qs * q
}

/// `Sigma_a = -i sum_{b,c} C[c][a][b] 1 (x) eta_b rho_c`.
pub fn sigma_operators(sys: &ConstraintSystem, ghosts: &Ghosts) -> Result<Vec<CMat>> {
    let n = sys.n();
    if ghosts.m() != n {
        return Err(BrstError::Shape(format!("{} ghost pairs for {n} constraints", ghosts.m())));
    }
    let id0 = linalg::identity(sys.h0_dim());
    let cst = sys.structure();
    (0..n)
        .map(|a| {
            let mut s = CMat::zeros(ghosts.dim(), ghosts.dim());
            for b in 0..n {
                for k in 0..n {
                    if cst[k][a][b] != 0.0 {
                        s += (ghosts.eta(b)? * ghosts.rho(k)?).scale(cst[k][a][b]);
                    }
                }
            }
            Ok(kron(&id0, &(s * -I)))
        })
        .collect()
}

/// Closed form of the Laplacian: `sum G_a^2 (x) 1` for abelian systems and
/// `1/2 sum G_a G_a (x) 1 + 1/2 sum (G_a (x) 1 + Sigma_a)^2` otherwise.
pub fn delta_closed_form(sys: &ConstraintSystem, ghosts: &Ghosts) -> Result<CMat> {
    let idg = linalg::identity(ghosts.dim());
    let squares = kron(&sys.sum_of_squares(), &idg);
    if sys.is_abelian() {
        return Ok(squares);
    }
    let sigmas = sigma_operators(sys, ghosts)?;
    let mut out = squares.scale(0.5);
    for (g, s) in sys.constraints().iter().zip(&sigmas) {
        let x = kron(g, &idg) + s;
        out += (&x * &x).scale(0.5);
    }
    Ok(out)
}

/// `|Delta - closed form| / |Delta|`.
pub fn delta_closed_form_residual(cplx: &BrstComplex, sys: &ConstraintSystem, ghosts: &Ghosts) -> Result<f64> {
    let delta = delta_operator(cplx);
    let closed = delta_closed_form(sys, ghosts)?;
    Ok(relative(linalg::op_norm(&(&delta - closed)), linalg::op_norm(&delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McpsReport {
    pub dirac_dim: usize,
    pub brst_dim: usize,
    pub ghost_dim: usize,
    pub ratio: Option<f64>,
    /// Residual of `ker Delta = (common kernel) (x) ghost space`.
    pub tensor_residual: f64,
    /// Signature `(n_plus, n_minus, n_zero)` of the Krein form on `ker Delta`.
    pub signature: (usize, usize, usize),
    /// Dimension of a maximal positive subspace of `ker Delta`. Reported as a
    /// number only; nothing downstream treats it as the physical space.
    pub positive_part_dim: usize,
}

pub fn mcps_report(cplx: &BrstComplex, sys: &ConstraintSystem, tol: &Tolerance) -> Result<McpsReport> {
    if !sys.is_abelian() {
        return Err(BrstError::Unsupported("multiple-copies report needs an abelian system".into()));
    }
    let ghost_dim = cplx.layout.ghost_dim();
    let dirac = linalg::kernel_basis(&sys.sum_of_squares(), tol);
    let brst = linalg::kernel_basis(&delta_operator(cplx), tol);
    let expected = kron(&dirac, &linalg::identity(ghost_dim));
    let signature = linalg::krein_signature(&brst, &cplx.krein(), tol)?;
    Ok(McpsReport {
        dirac_dim: dirac.ncols(),
        brst_dim: brst.ncols(),
        ghost_dim,
        ratio: (dirac.ncols() > 0).then(|| brst.ncols() as f64 / dirac.ncols() as f64),
        tensor_residual: linalg::subspace_distance(&brst, &expected),
        signature,
        positive_part_dim: signature.0,
    })
}

/// Pauli matrices over two: an su(2) constraint system with `C = epsilon`.
pub fn su2_system(tol: &Tolerance) -> Result<ConstraintSystem> {
    let half = |a: [[(f64, f64); 2]; 2]| {
        CMat::from_fn(2, 2, |i, j| c(a[i][j].0 * 0.5, a[i][j].1 * 0.5))
    };
    let g = vec![
        half([[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]]),
        half([[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]]),
        half([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]]),
    ];
    ConstraintSystem::new(2, g, Some(levi_civita()), tol)
}

pub fn levi_civita() -> StructureConstants {
    let mut e = vec![vec![vec![0.0; 3]; 3]; 3];
    for (a, b, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        e[k][a][b] = 1.0;
        e[k][b][a] = -1.0;
    }
    e
}
