use thiserror::Error;

/// Errors surfaced by the engine. Every failure carries enough context to
/// name the violated clause or the offending object.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("specialization parameter q must be > 1, got {0}")]
    QOutOfRange(String),
    #[error("arity mismatch: expected {expected}, got {got} ({context})")]
    ArityMismatch {
        expected: usize,
        got: usize,
        context: String,
    },
    #[error("ambient set mismatch: {0}")]
    AmbientMismatch(String),
    #[error("base mismatch: {0}")]
    BaseMismatch(String),
    #[error("point lies outside the domain: {0}")]
    PointOutsideDomain(String),
    #[error("not integrable: {witness}")]
    NotIntegrable { witness: String },
    #[error("polynomial prefactor degree {0} exceeds the configured cap {1}")]
    DegreeCapExceeded(usize, usize),
    #[error("uninstantiated parameters: {0:?}")]
    UninstantiatedParameters(Vec<String>),
    #[error("point-count space {0} exceeds the enumeration cap {1}")]
    CountTooLarge(u64, u64),
    #[error("presentation does not commute with the ambient projection: {0}")]
    PresentationMismatch(String),
    #[error("1-cell angular component vanishes on the base")]
    ZeroAngularComponent,
    #[error("missing Jacobian data: {0}")]
    MissingJacobianData(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("order is not negative on the whole base: {0}")]
    OrderNotNegative(String),
    #[error("cell decomposition is not adapted: {0}")]
    DecompositionNotAdapted(String),
    #[error("partition data invalid: {0}")]
    PartitionInvalid(String),
    #[error("not a subset: {0}")]
    NotASubset(String),
    #[error("integrability violation: {0}")]
    IntegrabilityViolation(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    ParseError { line: usize, col: usize, msg: String },
    #[error("validation error: {0}")]
    ValidationError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
