use thiserror::Error;

/// Errors raised by the geometric and group-theoretic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("homogeneous vector is zero within tolerance")]
    ZeroVector,
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
    #[error("points coincide projectively")]
    CoincidentPoints,
    #[error("lines coincide projectively")]
    CoincidentLines,
    #[error("cross ratio undefined: three of the four points coincide")]
    DegenerateQuadruple,
    #[error("generalized circle is degenerate (|B|^2 - AC <= 0)")]
    DegenerateCircle,
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("group is not controllable: {0}")]
    NotControllable(String),
    #[error("spectrum mismatch: {0}")]
    SpectrumMismatch(String),
    #[error("enumeration budget exceeded ({0} distinct elements)")]
    BudgetExceeded(usize),
    #[error("every base point lies in the excluded neighbourhood of the limit clouds")]
    EmptyDomain,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
