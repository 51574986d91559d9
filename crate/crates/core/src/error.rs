use thiserror::Error;

/// Library-wide error type. Variants are grouped by the stage that raises
/// them so a caller can map them onto coarse exit classes: input validation,
/// numerical degeneracy, comparison preconditions.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("basis is singular or too ill-conditioned (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("motif points {i} and {j} coincide modulo the lattice")]
    DuplicateMotifPoint { i: usize, j: usize },

    #[error("motif is empty")]
    EmptyMotif,

    #[error("dimension {0} is out of the supported range 1..=3")]
    UnsupportedDimension(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate zone arrangement: {0}")]
    DegenerateArrangement(String),

    #[error("cell is unbounded or empty; volumes require a finite cell")]
    NonFiniteCell,

    #[error("density table inconsistency: {0}")]
    Consistency(String),

    #[error("density tables have mismatched grids or dimensions: {0}")]
    GridMismatch(String),

    #[error("the two sets do not share a common lattice (max basis deviation {deviation:e})")]
    NoCommonLattice { deviation: f64 },

    #[error("motif cardinality mismatch: {a} vs {b} points")]
    MotifCardinalityMismatch { a: usize, b: usize },

    #[error("perturbation delta {delta} must stay below the packing radius {packing}")]
    DeltaTooLarge { delta: f64, packing: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse classification used by front ends to pick process exit codes.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            SingularBasis { .. } | DuplicateMotifPoint { .. } | EmptyMotif
            | UnsupportedDimension(_) | InvalidConfig(_) | Parse { .. } => ErrorClass::Validation,
            DegenerateArrangement(_) | NonFiniteCell | Consistency(_) => ErrorClass::Numerical,
            GridMismatch(_) | NoCommonLattice { .. } | MotifCardinalityMismatch { .. }
            | DeltaTooLarge { .. } => ErrorClass::Comparison,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Comparison,
}
