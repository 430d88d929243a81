//! Canonical forms of matrix pairs (A, F) satisfying A^st F = F A^r on
//! indefinite scalar product spaces over the complex numbers, the reals,
//! and the quaternions.
//!
//! The library validates such pairs, reduces them to a canonical direct sum
//! of 1x1 and 2x2 blocks together with an explicit change-of-basis witness,
//! generates random instances with known ground truth, and decides
//! equivalence of two pairs under (A, F) -> (S^-1 A S, S^st F S).

use std::fmt;

pub mod canon;
pub mod cli;
pub mod instance;
pub mod mat;
pub mod scalars;
pub mod spectral;

pub use canon::{
    block_matrices, canonicalize, classify_case, inertia, orbit_rep, scalar_orbit_normalize,
    CanonicalBlock, CanonicalForm, CaseTag, FormScalar, PartnerRule, TransformWitness,
};
pub use instance::{
    catalog, equivalent, random_instance, validate_pair, BlockRequest, Context, FieldMat,
    GeneratorSpec, MatrixPair, PairData, Tolerances, ValidationReport,
};
pub use mat::Mat;
pub use scalars::{Field, Involution, Quaternion, C64};
pub use spectral::{idx_conj, idx_pow_r, self_paired, snap_spectrum, EigIndex, SpectrumReport};

/// Crate-wide error type. Variant names are a stable part of the CLI
/// contract: failures are reported under `Error::name()`.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Illegal field/involution/form combination.
    Context(String),
    /// A matrix required to be nonsingular is singular (or Zero index with r < 0).
    Singular(String),
    /// An eigenvalue lies farther than the tolerance from every admissible value.
    Snap(String),
    /// Geometric multiplicities do not sum to the dimension.
    NotDiagonalizable(String),
    /// Numerical rank disagrees with a reported multiplicity.
    Rank(String),
    /// No catalog scalar is reachable from the given form value.
    Normalize(String),
    /// No admissible deflation vector found where the catalog requires one.
    DeflationStall(String),
    /// Coupled eigenspaces have different dimensions.
    PairingDimensionMismatch(String),
    /// A requested canonical block is not admissible for the case and exponent.
    Admissibility(String),
    /// The two pairs live in different contexts.
    ContextMismatch(String),
    /// A matrix lacks the symmetry required by the operation.
    Symmetry(String),
    /// The pair fails validation against its defining relation.
    Validation(String),
    /// Malformed input shapes or values.
    Shape(String),
}

impl Error {
    /// Stable error name used in CLI output.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Context(_) => "ContextError",
            Error::Singular(_) => "SingularError",
            Error::Snap(_) => "SnapError",
            Error::NotDiagonalizable(_) => "NotDiagonalizableError",
            Error::Rank(_) => "RankError",
            Error::Normalize(_) => "NormalizeError",
            Error::DeflationStall(_) => "DeflationStall",
            Error::PairingDimensionMismatch(_) => "PairingDimensionMismatch",
            Error::Admissibility(_) => "AdmissibilityError",
            Error::ContextMismatch(_) => "ContextMismatch",
            Error::Symmetry(_) => "SymmetryError",
            Error::Validation(_) => "ValidationError",
            Error::Shape(_) => "ShapeError",
        }
    }

    fn message(&self) -> &str {
        match self {
            Error::Context(m)
            | Error::Singular(m)
            | Error::Snap(m)
            | Error::NotDiagonalizable(m)
            | Error::Rank(m)
            | Error::Normalize(m)
            | Error::DeflationStall(m)
            | Error::PairingDimensionMismatch(m)
            | Error::Admissibility(m)
            | Error::ContextMismatch(m)
            | Error::Symmetry(m)
            | Error::Validation(m)
            | Error::Shape(m) => m,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name(), self.message())
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
