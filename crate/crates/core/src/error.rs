use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlebError {
    #[error("matrix is singular (|det| = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("orientation-reversing transformation (det = {det:e})")]
    OrientationError { det: f64 },
    #[error("triple is not perfect: wedge Gram deviates from 2δv by {deviation:e}")]
    NotPerfect { deviation: f64 },
    #[error("recovered metric is not positive definite")]
    NotRiemannian,
    #[error(
        "two-form is not tangent to the space of perfect triples: S₊⁴ channel has norm {norm:e}"
    )]
    NotInS { norm: f64 },
    #[error("symbol sequence is not exact: {0}")]
    NotExact(String),
    #[error("covector too small to define a k-adapted frame (|k| = {norm:e})")]
    DegenerateK { norm: f64 },
    #[error("Gram form is singular")]
    SingularGram,
    #[error("coefficient family is degenerate: {0}")]
    DegenerateFamily(String),
    #[error("adjoint pairing is singular: {0}")]
    SingularPairing(String),
    #[error("block splitting failed: {block} has norm {norm:e}")]
    SplitFailure { block: String, norm: f64 },
    #[error("fiber mismatch: expected {expected}, found {found}")]
    FiberMismatch { expected: usize, found: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PlebError {
    fn from(e: std::io::Error) -> Self {
        PlebError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PlebError>;
