//! Dirac constraining at matrix scale: the common kernel of the constraints,
//! the block-diagonal observables, and the physical algebra on the kernel.

use serde::{Deserialize, Serialize};

use crate::error::{BrstError, Result};
use crate::hamiltonian::ConstraintSystem;
use crate::linalg::{self, kron, CMat, Tolerance};
use crate::subspace::OperatorSubspace;

#[derive(Debug, Clone)]
pub struct DiracResult {
    pub p_phys_space: CMat,
    pub p_open: CMat,
    pub basis_phys: CMat,
    pub observables: OperatorSubspace,
    pub physical_algebra: OperatorSubspace,
    pub commutant: OperatorSubspace,
}

impl DiracResult {
    pub fn phys_dim(&self) -> usize {
        self.basis_phys.ncols()
    }

    /// No state satisfies every constraint.
    pub fn is_empty(&self) -> bool {
        self.phys_dim() == 0
    }
}

/// Matrices commuting with every generator.
pub fn commutant(generators: &[CMat], tol: &Tolerance) -> Result<OperatorSubspace> {
    let d = match generators.first() {
        Some(g) => g.nrows(),
        None => return Err(BrstError::Shape("commutant of an empty generator list".into())),
    };
    if d > crate::cohomology::MAX_SUPEROPERATOR_DIM {
        return Err(BrstError::Size(format!("commutant on dimension {d}")));
    }
    if generators.iter().any(|g| g.shape() != (d, d)) {
        return Err(BrstError::Shape("generators must be square of equal size".into()));
    }
    let id = linalg::identity(d);
    let n = d * d;
    let mut stacked = CMat::zeros(n * generators.len(), n);
    for (k, g) in generators.iter().enumerate() {
        // vec(AG - GA) = (G^T (x) 1 - 1 (x) G) vec(A)
        let block = kron(&g.transpose(), &id) - kron(&id, g);
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    Ok(OperatorSubspace::from_orthonormal(d, linalg::kernel_basis(&stacked, tol)))
}

pub fn dirac_constrain(sys: &ConstraintSystem, tol: &Tolerance) -> Result<DiracResult> {
    let d = sys.h0_dim();
    let basis_phys = linalg::kernel_basis(&sys.sum_of_squares(), tol);
    let p_phys_space = linalg::projector(&basis_phys);
    let p_open = linalg::identity(d) - &p_phys_space;
    let basis_open = linalg::range_basis(&p_open, tol);

    let outer = |v: &CMat| {
        let r = v.ncols();
        (0..r * r).map(move |idx| v.column(idx % r) * v.column(idx / r).adjoint()).collect::<Vec<_>>()
    };
    let phys_units = outer(&basis_phys);
    let mut block = phys_units.clone();
    block.extend(outer(&basis_open));

    Ok(DiracResult {
        observables: OperatorSubspace::span(d, &block, tol),
        physical_algebra: OperatorSubspace::span(d, &phys_units, tol),
        commutant: commutant(sys.constraints(), tol)?,
        p_phys_space,
        p_open,
        basis_phys,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    Equal,
    /// The reference algebra sits strictly inside the BRST one.
    ProperContainment,
    /// The BRST algebra sits strictly inside the reference one.
    ReverseContainment,
    Incomparable,
}

/// How a matter operator is carried into the BRST frame on `H_s`.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// Orthonormal basis of `H_s` in the total space.
    pub basis_s: CMat,
    /// Dimension of the tensor factors after the matter factor.
    pub rest_dim: usize,
    pub rule: String,
}

impl Embedding {
    pub fn tensor_identity(basis_s: CMat, rest_dim: usize) -> Self {
        Embedding { basis_s, rest_dim, rule: "X -> P_s (X (x) 1) P_s restricted to H_s".into() }
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let lifted = kron(x, &linalg::identity(self.rest_dim));
        self.basis_s.adjoint() * lifted * &self.basis_s
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub reference_dim: usize,
    pub brst_dim: usize,
    pub containment: Containment,
    pub reference_in_brst: f64,
    pub brst_in_reference: f64,
    /// A BRST element on `H_s` orthogonal to the reference algebra.
    pub witness: Option<CMat>,
    pub rule: String,
}

/// Compares two subspaces living on the same `H_s`.
pub fn compare_algebras(reference: &OperatorSubspace, brst: &OperatorSubspace, rule: &str, tol: &Tolerance) -> Result<Comparison> {
    if reference.ambient_dim() != brst.ambient_dim() {
        return Err(BrstError::Shape(format!(
            "reference on dimension {}, BRST algebra on {}",
            reference.ambient_dim(),
            brst.ambient_dim()
        )));
    }
    let fwd = reference.containment_residual(brst);
    let back = brst.containment_residual(reference);
    let thr = tol.subspace();
    let containment = match (fwd <= thr, back <= thr) {
        (true, true) => Containment::Equal,
        (true, false) => Containment::ProperContainment,
        (false, true) => Containment::ReverseContainment,
        (false, false) => Containment::Incomparable,
    };
    let witness = (back > thr).then(|| {
        let best = (0..brst.len())
            .map(|k| brst.matrix(k))
            .map(|m| {
                let r = &m - reference.project(&m);
                (r.norm(), r)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(n, r)| r / linalg::c(n, 0.0));
        best.expect("nonempty when residual is positive")
    });
    Ok(Comparison {
        reference_dim: reference.len(),
        brst_dim: brst.len(),
        containment,
        reference_in_brst: fwd,
        brst_in_reference: back,
        witness,
        rule: rule.into(),
    })
}

pub fn compare_dirac_brst(
    dirac: &DiracResult,
    brst_on_hs: &OperatorSubspace,
    embedding: &Embedding,
    tol: &Tolerance,
) -> Result<Comparison> {
    let d_s = embedding.basis_s.ncols();
    if brst_on_hs.ambient_dim() != d_s {
        return Err(BrstError::Shape(format!("BRST algebra on {} but H_s has dimension {d_s}", brst_on_hs.ambient_dim())));
    }
    let embedded: Vec<CMat> = dirac.physical_algebra.matrices().iter().map(|x| embedding.apply(x)).collect();
    let reference = OperatorSubspace::span(d_s, &embedded, tol);
    compare_algebras(&reference, brst_on_hs, &embedding.rule, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_diag};

    fn pauli() -> Vec<CMat> {
        vec![
            CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            from_real_diag(&[1.0, -1.0]),
        ]
    }

    #[test]
    fn commutants() {
        let tol = Tolerance::default();
        assert_eq!(commutant(&[linalg::identity(3)], &tol).unwrap().len(), 9);
        let diag = commutant(&[from_real_diag(&[0.0, 1.0])], &tol).unwrap();
        assert_eq!(diag.len(), 2);
        assert!(diag.product_residual(16) < 1e-12 && diag.adjoint_residual() < 1e-12);
        let sc = commutant(&pauli(), &tol).unwrap();
        assert_eq!(sc.len(), 1);
        assert!(sc.distance_to(&OperatorSubspace::scalars(2)) < 1e-12);
        // double commutant of an irreducible set
        assert_eq!(commutant(&sc.matrices(), &tol).unwrap().len(), 4);
    }

    #[test]
    fn single_projection() {
        let tol = Tolerance::default();
        let sys = ConstraintSystem::new(2, vec![from_real_diag(&[0.0, 1.0])], None, &tol).unwrap();
        let r = dirac_constrain(&sys, &tol).unwrap();
        assert_eq!(r.phys_dim(), 1);
        assert_eq!(r.physical_algebra.len(), 1);
        assert_eq!(r.observables.len(), 2);
        assert!((&r.p_open + &r.p_phys_space - linalg::identity(2)).norm() < 1e-12);
        // the compressed commutant equals the physical algebra
        let compressed = r.commutant.map(|a| &r.p_phys_space * a * &r.p_phys_space, &tol);
        assert!(compressed.distance_to(&r.physical_algebra) < 1e-10);
    }

    #[test]
    fn unconstrained_and_overconstrained() {
        let tol = Tolerance::default();
        let free = ConstraintSystem::new(2, vec![CMat::zeros(2, 2)], None, &tol).unwrap();
        assert_eq!(dirac_constrain(&free, &tol).unwrap().physical_algebra.len(), 4);
        let two = ConstraintSystem::new(
            3,
            vec![from_real_diag(&[0.0, 0.0, 1.0]), from_real_diag(&[0.0, 1.0, 0.0])],
            None,
            &tol,
        )
        .unwrap();
        let r = dirac_constrain(&two, &tol).unwrap();
        assert_eq!((r.phys_dim(), r.physical_algebra.len()), (1, 1));
        assert!(r.physical_algebra.product_residual(10) < 1e-12);
    }

    #[test]
    fn containment_verdicts() {
        let tol = Tolerance::default();
        let full = OperatorSubspace::full(2);
        let sc = OperatorSubspace::scalars(2);
        assert_eq!(compare_algebras(&sc, &full, "", &tol).unwrap().containment, Containment::ProperContainment);
        assert_eq!(compare_algebras(&full, &full, "", &tol).unwrap().containment, Containment::Equal);
        let cmp = compare_algebras(&full, &sc, "", &tol).unwrap();
        assert_eq!(cmp.containment, Containment::ReverseContainment);
        assert!(cmp.witness.is_none());
    }
}
