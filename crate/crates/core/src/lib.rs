//! Finite-dimensional BRST quantization on Krein spaces.
//!
//! Builds nilpotent charges for matrix constraint systems and truncated
//! bosonic models, splits the state space into the physical part and the
//! two null parts, and compares the BRST physical algebra with the one
//! obtained by constraining first.

pub mod bose;
pub mod check;
pub mod cohomology;
pub mod dirac;
pub mod error;
pub mod ghost;
pub mod hamiltonian;
pub mod linalg;
pub mod report;
pub mod subspace;

pub use check::Check;
pub use error::{BrstError, Result};
pub use ghost::{BerezinRep, GhostKind, GhostRep, Ghosts};
pub use hamiltonian::{BrstComplex, ConstraintSystem, Layout};
pub use linalg::{CMat, CVec, KreinSpace, Tolerance};
pub use subspace::OperatorSubspace;
pub use report::{emit, run_pipeline, Format, Report, Stage, SystemSpec, Verdict};
