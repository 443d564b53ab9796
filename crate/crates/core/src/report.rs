//! System descriptions, the staged pipeline, and report emission.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::bose::{build_combined_q, build_ko_abelian_q, gupta_bleuler_compare, BosonicSector};
use crate::check::Check;
use crate::cohomology::{
    brst_physical_algebra, dsp_decompose, physicality_check, structure_theorem_check, superderivation_matrix, DspData,
    MAX_SUPEROPERATOR_DIM,
};
use crate::dirac::{compare_algebras, compare_dirac_brst, dirac_constrain, Comparison, Containment, Embedding};
use crate::error::{BrstError, Result};
use crate::ghost::{grade_subspace, GhostKind, GhostRep, Ghosts};
use crate::hamiltonian::{
    build_hamiltonian_q, delta_closed_form_residual, delta_operator, mcps_report, ConstraintSystem, Layout,
    StructureConstants,
};
use crate::linalg::{self, c, CMat, KreinSpace, Tolerance};
use crate::subspace::OperatorSubspace;

/// Largest operator whose full Laplacian spectrum goes into a report.
const MAX_SPECTRUM_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Hamiltonian,
    KoAbelian,
    Combined,
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(a: &CMat) -> JsonMatrix {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<CMat> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(BrstError::InvalidInput(format!("{what}: row {i} has {} entries, expected {ncols}", rows[i].len())));
    }
    let a = CMat::from_fn(rows.len(), ncols, |i, j| c(rows[i][j][0], rows[i][j][1]));
    if !linalg::is_finite(&a) {
        return Err(BrstError::InvalidInput(format!("{what}: non-finite entry")));
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BosonicSpec {
    #[serde(default)]
    pub dt_dim: usize,
    /// Number of constraint pairs; defaults to 1, or to the number of
    /// constraints for a combined system.
    #[serde(default)]
    pub m: Option<usize>,
    pub cutoff: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    #[serde(default)]
    pub abs: Option<f64>,
    #[serde(default)]
    pub rank_rel: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub kind: SystemKind,
    #[serde(default)]
    pub h0_dim: Option<usize>,
    #[serde(default)]
    pub constraints: Vec<JsonMatrix>,
    #[serde(default)]
    pub structure_constants: Option<StructureConstants>,
    #[serde(default)]
    pub ghost_rep: Option<GhostKind>,
    #[serde(default)]
    pub bosonic: Option<BosonicSpec>,
    #[serde(default)]
    pub tol: Option<TolSpec>,
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BrstError::InvalidInput(format!("system description: {e}")))
    }

    /// Absolute tolerance from the first of `cli_abs`, the description and
    /// `env_abs` that is set; the relative rank cutoff from the description.
    pub fn tolerance(&self, cli_abs: Option<f64>, env_abs: Option<f64>) -> Result<Tolerance> {
        let spec = self.tol.clone().unwrap_or_default();
        let d = Tolerance::default();
        Tolerance::new(
            cli_abs.or(spec.abs).or(env_abs).unwrap_or(d.abs),
            spec.rank_rel.unwrap_or(d.rank_rel),
        )
    }

    fn h0_dim(&self) -> Result<usize> {
        self.h0_dim.ok_or_else(|| BrstError::InvalidInput("h0_dim is required for this kind".into()))
    }

    pub fn constraint_system(&self, tol: &Tolerance) -> Result<ConstraintSystem> {
        let h0 = self.h0_dim()?;
        let gs = self
            .constraints
            .iter()
            .enumerate()
            .map(|(a, g)| matrix_from_json(g, &format!("constraints[{a}]")))
            .collect::<Result<Vec<_>>>()?;
        ConstraintSystem::new(h0, gs, self.structure_constants.clone(), tol)
    }

    fn bosonic(&self) -> Result<&BosonicSpec> {
        self.bosonic.as_ref().ok_or_else(|| BrstError::InvalidInput("bosonic is required for this kind".into()))
    }

    fn require_full_ghosts(&self) -> Result<()> {
        match self.ghost_rep {
            Some(GhostKind::Berezin) => {
                Err(BrstError::InvalidInput("bosonic systems use the full ghost representation".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Build the charge and verify its defining identities.
    Check,
    /// Add the decomposition into `H_d + H_s + H_p`.
    Dsp,
    /// Add the operator cohomology and the BRST physical algebra.
    Physical,
    /// Add the comparison with the reference physical algebra.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    BrstStrictlyLarger,
    Trivial,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub total_dim: Option<usize>,
    pub ghost_dim: Option<usize>,
    pub guard_level: Option<usize>,
    pub d_d: Option<usize>,
    pub d_s: Option<usize>,
    pub d_p: Option<usize>,
    /// Dimension of the reference physical space.
    pub dirac_phys: Option<usize>,
    /// Dimension of `H_s`.
    pub brst_phys: Option<usize>,
    pub reference_algebra: Option<usize>,
    pub brst_algebra: Option<usize>,
    /// Krein signature of `H_s` as `[positive, negative, neutral]`.
    pub hs_signature: Option<[usize; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Spectra {
    /// Eigenvalues of the Laplacian `QQ* + Q*Q`, ascending.
    pub laplacian: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub name: String,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: SystemKind,
    pub stage: Stage,
    pub layout: Layout,
    pub tolerance: Tolerance,
    pub checks: Vec<Check>,
    pub dims: Dims,
    pub spectra: Spectra,
    pub verdict: Option<Verdict>,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl Report {
    fn new(kind: SystemKind, stage: Stage, layout: Layout, tol: &Tolerance) -> Self {
        Report {
            kind,
            stage,
            layout,
            tolerance: *tol,
            checks: Vec::new(),
            dims: Dims::default(),
            spectra: Spectra::default(),
            verdict: None,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn passed(&self) -> bool {
        self.failed_checks().next().is_none()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn record_dsp(&mut self, dsp: &DspData, q: &CMat, k: &KreinSpace, tol: &Tolerance) -> Result<()> {
        self.dims.d_d = Some(dsp.d_d);
        self.dims.d_s = Some(dsp.d_s);
        self.dims.d_p = Some(dsp.d_p);
        self.dims.brst_phys = Some(dsp.d_s);
        self.checks.extend(dsp.checks(q, k, tol));
        let (p, n, z) = linalg::krein_signature(&dsp.basis_s, k, tol)?;
        self.dims.hs_signature = Some([p, n, z]);
        Ok(())
    }

    fn record_comparison(&mut self, cmp: &Comparison, tol: &Tolerance) {
        self.dims.reference_algebra = Some(cmp.reference_dim);
        self.dims.brst_algebra = Some(cmp.brst_dim);
        self.checks.push(Check::at_most("reference_in_brst", cmp.reference_in_brst, tol.subspace()));
        self.verdict = match cmp.containment {
            Containment::Equal => Some(Verdict::Equivalent),
            Containment::ProperContainment => Some(Verdict::BrstStrictlyLarger),
            Containment::ReverseContainment | Containment::Incomparable => None,
        };
        if let Some(w) = &cmp.witness {
            self.witnesses.push(Witness { name: "brst_outside_reference".into(), matrix: matrix_to_json(w) });
        }
        self.notes.push(format!("embedding: {}", cmp.rule));
    }

    fn record_spectrum(&mut self, delta: &CMat, tol: &Tolerance) -> Result<()> {
        if delta.nrows() > MAX_SPECTRUM_DIM {
            self.notes.push(format!("laplacian spectrum omitted above dimension {MAX_SPECTRUM_DIM}"));
            return Ok(());
        }
        self.spectra.laplacian = linalg::hermitian_eig(delta, tol)?.values;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input error: {0}")]
    Input(BrstError),
    #[error("numerical error: {0}")]
    Numeric(BrstError),
}

impl PipelineError {
    /// 2 for bad input, 1 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 2,
            PipelineError::Numeric(_) => 1,
        }
    }
}

type Pipeline<T> = std::result::Result<T, PipelineError>;

fn input<T>(r: Result<T>) -> Pipeline<T> {
    r.map_err(PipelineError::Input)
}

fn numeric<T>(r: Result<T>) -> Pipeline<T> {
    r.map_err(PipelineError::Numeric)
}

/// Runs every step up to and including `stage`.
pub fn run_pipeline(spec: &SystemSpec, stage: Stage, tol: &Tolerance) -> Pipeline<Report> {
    match spec.kind {
        SystemKind::Hamiltonian => hamiltonian_pipeline(spec, stage, tol),
        SystemKind::KoAbelian => ko_pipeline(spec, stage, tol),
        SystemKind::Combined => combined_pipeline(spec, stage, tol),
    }
}

fn superoperator_guard(dim: usize) -> Pipeline<()> {
    if dim > MAX_SUPEROPERATOR_DIM {
        return Err(PipelineError::Numeric(BrstError::Size(format!(
            "operator cohomology needs total dimension <= {MAX_SUPEROPERATOR_DIM}, got {dim}"
        ))));
    }
    Ok(())
}

fn hamiltonian_pipeline(spec: &SystemSpec, stage: Stage, tol: &Tolerance) -> Pipeline<Report> {
    if spec.bosonic.is_some() {
        return Err(PipelineError::Input(BrstError::InvalidInput("bosonic is not used by hamiltonian systems".into())));
    }
    let sys = input(spec.constraint_system(tol))?;
    let kind = spec.ghost_rep.unwrap_or_else(|| GhostKind::default_for(sys.n()));
    let ghosts = input(Ghosts::build(kind, sys.n()))?;
    let cplx = numeric(build_hamiltonian_q(&sys, &ghosts, tol))?;

    let mut r = Report::new(SystemKind::Hamiltonian, stage, cplx.layout.clone(), tol);
    r.dims.total_dim = Some(cplx.total_dim());
    r.dims.ghost_dim = Some(ghosts.dim());
    r.checks.extend(cplx.invariants(tol));
    let closed = numeric(delta_closed_form_residual(&cplx, &sys, &ghosts))?;
    r.checks.push(Check::at_most("laplacian_closed_form", closed, tol.abs));
    numeric(r.record_spectrum(&delta_operator(&cplx), tol))?;
    if stage == Stage::Check {
        return Ok(r);
    }

    let k = cplx.krein();
    let dsp = numeric(dsp_decompose(&cplx.q, &k, tol))?;
    numeric(r.record_dsp(&dsp, &cplx.q, &k, tol))?;
    let dirac = numeric(dirac_constrain(&sys, tol))?;
    r.dims.dirac_phys = Some(dirac.phys_dim());
    if sys.is_abelian() {
        let mcps = numeric(mcps_report(&cplx, &sys, tol))?;
        r.checks.push(Check::at_most("kernel_is_constraint_kernel_times_ghosts", mcps.tensor_residual, tol.subspace()));
        if mcps.brst_dim > mcps.dirac_dim {
            r.notes.push(format!(
                "multiple copies: H_s has dimension {} against {} constrained states",
                mcps.brst_dim, mcps.dirac_dim
            ));
        }
    }
    if stage == Stage::Dsp {
        return Ok(r);
    }

    superoperator_guard(cplx.total_dim())?;
    let delta = numeric(superderivation_matrix(&cplx.q, &cplx.grading, tol))?;
    let st = numeric(structure_theorem_check(&delta, &dsp, tol))?;
    r.checks.extend(st.checks(dsp.d_s, tol));
    let zero = numeric(grade_subspace(&cplx.g_total, 0, tol))?;
    let phys = numeric(brst_physical_algebra(&delta, &dsp, Some(&zero), &k, tol))?;
    r.checks.push(Check::flag("physical_algebra_star_closed", phys.star_closed));
    r.checks.push(Check::flag("involution_factors", phys.involution_factors));
    r.dims.brst_algebra = Some(phys.on_hs.len());
    r.notes.push("BRST algebra restricted to ghost number zero".into());
    if stage == Stage::Physical {
        return Ok(r);
    }

    let compressed = dirac.commutant.map(|a| &dirac.p_phys_space * a * &dirac.p_phys_space, tol);
    r.checks.push(Check::at_most(
        "commutant_compression_is_physical_algebra",
        compressed.distance_to(&dirac.physical_algebra),
        tol.subspace(),
    ));
    if dsp.d_s == 0 {
        r.verdict = Some(Verdict::Trivial);
        return Ok(r);
    }
    let emb = Embedding::tensor_identity(dsp.basis_s.clone(), ghosts.dim());
    let cmp = numeric(compare_dirac_brst(&dirac, &phys.on_hs, &emb, tol))?;
    r.record_comparison(&cmp, tol);
    Ok(r)
}

fn ko_pipeline(spec: &SystemSpec, stage: Stage, tol: &Tolerance) -> Pipeline<Report> {
    if !spec.constraints.is_empty() || spec.structure_constants.is_some() {
        return Err(PipelineError::Input(BrstError::InvalidInput("ko_abelian systems take no constraint matrices".into())));
    }
    input(spec.require_full_ghosts())?;
    let b = input(spec.bosonic())?;
    let m = b.m.unwrap_or(1);
    let sector = input(BosonicSector::new(b.dt_dim, m, b.cutoff))?;
    let ghosts = input(GhostRep::new(m))?;
    let ko = numeric(build_ko_abelian_q(&sector, &ghosts))?;
    let (cplx, idx) = ko.conserved_complex();
    let level = sector.guard_level();

    let mut r = Report::new(SystemKind::KoAbelian, stage, cplx.layout.clone(), tol);
    r.dims.total_dim = Some(cplx.total_dim());
    r.dims.ghost_dim = Some(ghosts.fock_dim());
    r.dims.guard_level = Some(level);
    r.notes.push(format!(
        "guard identities hold on boson number <= {level}; the complex is the span of states with boson plus ghost number <= {level}"
    ));
    r.checks.extend(ko.guard_checks(tol));
    r.checks.extend(cplx.invariants(tol));
    numeric(r.record_spectrum(&delta_operator(&cplx), tol))?;
    if stage == Stage::Check {
        return Ok(r);
    }

    let k = cplx.krein();
    let dsp = numeric(dsp_decompose(&cplx.q, &k, tol))?;
    numeric(r.record_dsp(&dsp, &cplx.q, &k, tol))?;
    let vacua = ko.matter_vacuum_states(level);
    r.checks.push(Check::at_most(
        "hs_is_matter_fock_times_ghost_vacuum",
        linalg::subspace_distance(&dsp.basis_s, &vacua.select_rows(&idx)),
        tol.subspace(),
    ));
    r.checks.push(Check::at_most(
        "guard_kernel_is_matter_fock_times_ghost_vacuum",
        linalg::subspace_distance(&ko.kernel_on_guard(tol), &vacua),
        tol.subspace(),
    ));
    let phys = numeric(physicality_check(&dsp, &k, tol))?;
    r.checks.push(Check::at_most("hs_physical", phys.residual, tol.subspace()));
    if sector.dt_dim() >= 1 {
        let gb = numeric(gupta_bleuler_compare(&sector, tol))?;
        r.dims.dirac_phys = Some(gb.quotient_dim);
        r.checks.push(Check::at_most("gupta_bleuler_isometry", gb.isometry_residual, tol.subspace()));
        r.checks.push(Check::at_most("gupta_bleuler_neutral_part_killed", gb.neutral_residual, tol.subspace()));
        r.checks.push(Check::at_most("gupta_bleuler_onto", gb.onto_residual, tol.subspace()));
        r.checks.push(Check::at_most(
            "gupta_bleuler_quotient_is_hs",
            (gb.quotient_dim as f64 - dsp.d_s as f64).abs(),
            0.0,
        ));
    }
    if stage == Stage::Dsp {
        return Ok(r);
    }

    superoperator_guard(cplx.total_dim())?;
    let delta = numeric(superderivation_matrix(&cplx.q, &cplx.grading, tol))?;
    let st = numeric(structure_theorem_check(&delta, &dsp, tol))?;
    r.checks.extend(st.checks(dsp.d_s, tol));
    let brst = numeric(brst_physical_algebra(&delta, &dsp, None, &k, tol))?;
    r.checks.push(Check::flag("physical_algebra_star_closed", brst.star_closed));
    r.checks.push(Check::flag("involution_factors", brst.involution_factors));
    r.dims.brst_algebra = Some(brst.on_hs.len());
    if stage == Stage::Physical {
        return Ok(r);
    }

    let vacuum_only = dsp.d_s == 1 && (dsp.basis_s[(0, 0)].norm() - 1.0).abs() <= tol.subspace();
    let fields: Vec<CMat> =
        ko.matter_fields(&idx).iter().map(|a| dsp.basis_s.adjoint() * a * &dsp.basis_s).collect();
    let reference = OperatorSubspace::generated_algebra(dsp.d_s, &fields, tol);
    let rule = "matter fields A(g), g in D_t, compressed to H_s; generated unital algebra";
    let cmp = numeric(compare_algebras(&reference, &brst.on_hs, rule, tol))?;
    r.record_comparison(&cmp, tol);
    if dsp.d_s == 0 || vacuum_only {
        r.verdict = Some(Verdict::Trivial);
    }
    Ok(r)
}

fn combined_pipeline(spec: &SystemSpec, stage: Stage, tol: &Tolerance) -> Pipeline<Report> {
    input(spec.require_full_ghosts())?;
    let sys = input(spec.constraint_system(tol))?;
    if !sys.is_abelian() {
        return Err(PipelineError::Input(BrstError::Unsupported("combined charge needs abelian constraints".into())));
    }
    let b = input(spec.bosonic())?;
    if b.dt_dim != 0 || b.m.is_some_and(|m| m != sys.n()) {
        return Err(PipelineError::Input(BrstError::InvalidInput(
            "combined systems need dt_dim = 0 and one boson pair per constraint".into(),
        )));
    }
    let sector = input(BosonicSector::new(0, sys.n(), b.cutoff))?;
    let ghosts = input(GhostRep::new(sys.n()))?;
    let cc = numeric(build_combined_q(&sys, &sector, &ghosts))?;
    let cplx = &cc.complex;

    let mut r = Report::new(SystemKind::Combined, stage, cplx.layout.clone(), tol);
    r.dims.total_dim = Some(cplx.total_dim());
    r.dims.ghost_dim = Some(ghosts.fock_dim());
    r.dims.guard_level = Some(sector.guard_level());
    r.notes.push(format!("identities asserted on boson number <= {}", sector.guard_level()));
    r.checks.extend(cc.guard_checks(tol));
    let e = cc.guard_isometry();
    numeric(r.record_spectrum(&(e.adjoint() * delta_operator(cplx) * &e), tol))?;
    if stage == Stage::Check {
        return Ok(r);
    }

    let basis_s = cc.kernel_on_guard(tol);
    let expected = cc.expected_kernel(&sys, tol);
    let d_s = basis_s.ncols();
    r.dims.d_s = Some(d_s);
    r.dims.brst_phys = Some(d_s);
    r.notes.push("d_d and d_p omitted: the truncated charge is nilpotent only on the guard subspace".into());
    r.checks.push(Check::at_most(
        "guard_kernel_is_constraint_kernel_times_vacua",
        linalg::subspace_distance(&basis_s, &expected),
        tol.subspace(),
    ));
    let k = cplx.krein();
    let p_s = linalg::projector(&basis_s);
    r.checks.push(Check::at_most("hs_physical", linalg::op_norm(&(k.j() * &p_s - &p_s)), tol.subspace()));
    let (p, n, z) = numeric(linalg::krein_signature(&basis_s, &k, tol))?;
    r.dims.hs_signature = Some([p, n, z]);
    let dirac = numeric(dirac_constrain(&sys, tol))?;
    r.dims.dirac_phys = Some(dirac.phys_dim());
    if stage == Stage::Dsp {
        return Ok(r);
    }

    let q = &cplx.q;
    let g = &cplx.grading;
    let residual = [q * &p_s, &p_s * q, g * &p_s * g - &p_s].iter().map(linalg::op_norm).fold(0.0, f64::max);
    r.checks.push(Check::at_most(
        "hs_compressions_in_ker_delta",
        residual,
        tol.subspace() * linalg::op_norm(q).max(1.0),
    ));
    r.notes.push("Phi_s(Ker delta) is all of B(H_s) because Q P_s = P_s Q = 0 and P_s is even".into());
    let brst = OperatorSubspace::full(d_s);
    r.dims.brst_algebra = Some(brst.len());
    if stage == Stage::Physical {
        return Ok(r);
    }

    if d_s == 0 {
        r.verdict = Some(Verdict::Trivial);
        return Ok(r);
    }
    let emb = Embedding::tensor_identity(basis_s, sector.fock_dim() * ghosts.fock_dim());
    let cmp = numeric(compare_dirac_brst(&dirac, &brst, &emb, tol))?;
    r.record_comparison(&cmp, tol);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Json => emit_json(&serde_json::to_value(report).expect("report serializes")),
        Format::Text => emit_text(report),
    }
}

/// Pretty JSON with sorted keys, floats in 17 significant digits and
/// non-finite floats as null. Parsing the output and emitting again
/// reproduces it byte for byte.
pub fn emit_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push_str(": ");
                write_value(out, &map[key.as_str()], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

fn emit_text(r: &Report) -> String {
    let opt = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
    let enum_name = |v: Value| v.as_str().map_or("-".to_string(), str::to_string);
    let mut out = String::new();
    writeln!(out, "brstlab report").unwrap();
    writeln!(out, "  kind     {}", enum_name(serde_json::to_value(r.kind).unwrap())).unwrap();
    writeln!(out, "  stage    {}", enum_name(serde_json::to_value(r.stage).unwrap())).unwrap();
    writeln!(out, "  tol      abs {:e}  rank_rel {:e}", r.tolerance.abs, r.tolerance.rank_rel).unwrap();
    writeln!(out, "  verdict  {}", r.verdict.map_or("-".into(), |v| enum_name(serde_json::to_value(v).unwrap())))
        .unwrap();
    writeln!(out, "dimensions").unwrap();
    let d = &r.dims;
    for (name, v) in [
        ("total", d.total_dim),
        ("ghost", d.ghost_dim),
        ("guard_level", d.guard_level),
        ("d_d", d.d_d),
        ("d_s", d.d_s),
        ("d_p", d.d_p),
        ("dirac_phys", d.dirac_phys),
        ("brst_phys", d.brst_phys),
        ("reference_algebra", d.reference_algebra),
        ("brst_algebra", d.brst_algebra),
    ] {
        writeln!(out, "  {name:<18} {:>6}", opt(v)).unwrap();
    }
    if let Some([p, n, z]) = d.hs_signature {
        writeln!(out, "  {:<18} {p} positive, {n} negative, {z} neutral", "hs_signature").unwrap();
    }
    writeln!(out, "checks").unwrap();
    for chk in &r.checks {
        writeln!(out, "  {}  {:<48} {:.3e}", if chk.pass { "PASS" } else { "FAIL" }, chk.name, chk.residual).unwrap();
    }
    if !r.spectra.laplacian.is_empty() {
        let vals: Vec<String> = r.spectra.laplacian.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(out, "laplacian spectrum").unwrap();
        for chunk in vals.chunks(8) {
            writeln!(out, "  {}", chunk.join(" ")).unwrap();
        }
    }
    for w in &r.witnesses {
        writeln!(out, "witness {} ({}x{})", w.name, w.matrix.len(), w.matrix.first().map_or(0, Vec::len)).unwrap();
    }
    for note in &r.notes {
        writeln!(out, "note: {note}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_projection() -> SystemSpec {
        SystemSpec::from_json(
            r#"{"kind": "hamiltonian", "h0_dim": 2,
                "constraints": [[[[0,0],[0,0]],[[0,0],[1,0]]]], "ghost_rep": "berezin"}"#,
        )
        .unwrap()
    }

    #[test]
    fn single_projection_is_strictly_larger() {
        let tol = Tolerance::default();
        let r = run_pipeline(&single_projection(), Stage::Compare, &tol).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks().collect::<Vec<_>>());
        assert_eq!(r.verdict, Some(Verdict::BrstStrictlyLarger));
        assert_eq!((r.dims.dirac_phys, r.dims.brst_phys), (Some(1), Some(2)));
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn stages_stop_early() {
        let tol = Tolerance::default();
        let r = run_pipeline(&single_projection(), Stage::Check, &tol).unwrap();
        assert!(r.dims.d_s.is_none() && r.verdict.is_none());
        let r = run_pipeline(&single_projection(), Stage::Dsp, &tol).unwrap();
        assert_eq!(r.dims.d_s, Some(2));
    }

    #[test]
    fn ko_trivial_and_combined() {
        let tol = Tolerance::default();
        let ko = SystemSpec::from_json(r#"{"kind": "ko_abelian", "bosonic": {"dt_dim": 0, "m": 1, "cutoff": 3}}"#).unwrap();
        let r = run_pipeline(&ko, Stage::Compare, &tol).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks().collect::<Vec<_>>());
        assert_eq!(r.verdict, Some(Verdict::Trivial));
        let cb = SystemSpec::from_json(
            r#"{"kind": "combined", "h0_dim": 2, "constraints": [[[[0,0],[0,0]],[[0,0],[1,0]]]],
                "bosonic": {"cutoff": 3}}"#,
        )
        .unwrap();
        let r = run_pipeline(&cb, Stage::Compare, &tol).unwrap();
        assert!(r.passed(), "{:?}", r.failed_checks().collect::<Vec<_>>());
        assert_eq!(r.verdict, Some(Verdict::Equivalent));
    }

    #[test]
    fn input_errors() {
        assert!(SystemSpec::from_json(r#"{"kind": "nope"}"#).is_err());
        assert!(SystemSpec::from_json(r#"{"kind": "hamiltonian", "extra": 1}"#).is_err());
        let bad = SystemSpec::from_json(
            r#"{"kind": "hamiltonian", "h0_dim": 2, "constraints": [[[[0,0],[1,0]],[[0,0],[1,0]]]]}"#,
        )
        .unwrap();
        let err = run_pipeline(&bad, Stage::Check, &Tolerance::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn tolerance_precedence() {
        let mut spec = single_projection();
        assert_eq!(spec.tolerance(None, None).unwrap(), Tolerance::default());
        assert_eq!(spec.tolerance(None, Some(1e-8)).unwrap().abs, 1e-8);
        spec.tol = Some(TolSpec { abs: Some(1e-9), rank_rel: None });
        assert_eq!(spec.tolerance(None, Some(1e-8)).unwrap().abs, 1e-9);
        assert_eq!(spec.tolerance(Some(1e-7), Some(1e-8)).unwrap().abs, 1e-7);
        assert!(spec.tolerance(Some(-1.0), None).is_err());
    }

    #[test]
    fn json_is_a_fixed_point() {
        let r = run_pipeline(&single_projection(), Stage::Compare, &Tolerance::default()).unwrap();
        let text = emit(&r, Format::Json);
        let again = emit_json(&serde_json::from_str(&text).unwrap());
        assert_eq!(text, again);
        let parsed: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(emit_json(&serde_json::json!({"checks": [], "b": 1.5})), "{\n  \"b\": 1.5000000000000000e0,\n  \"checks\": []\n}\n");
    }
}
