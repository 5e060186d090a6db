use thiserror::Error;

pub type Result<T, E = CapError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CapError {
    #[error("digit {0} is not in {{0,1,2}}")]
    InvalidDigit(u8),
    #[error("code {code} is out of range for dimension {dim}")]
    CodeOutOfRange { dim: usize, code: u64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is outside the supported range 1..={max}", max = crate::space::MAX_DIM)]
    UnsupportedDimension(usize),
    #[error("duplicate point {0}")]
    DuplicatePoint(String),
    #[error("field elements belong to different moduli")]
    ModulusMismatch,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("polynomial is not monic of degree >= 1")]
    NotMonic,
    #[error("extension degree {0} is outside the supported range")]
    DegreeOutOfRange(usize),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("points coincide")]
    CoincidentPoints,
    #[error("matrix is not invertible over F_3")]
    NotInvertible,
    #[error("point list is not affinely independent")]
    AffinelyDependent,
    #[error("set is not a {0}-cap")]
    NotACap(u32),
    #[error("invalid cap order d = {0}")]
    InvalidOrder(u32),
    #[error("subset enumeration refused: {0}")]
    TooLarge(String),
    #[error("dimension {0} must be odd")]
    EvenDimension(usize),
    #[error("unknown witness '{0}'")]
    UnknownWitness(String),
    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("infeasible search configuration: {0}")]
    Infeasible(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}
