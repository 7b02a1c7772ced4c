use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no factors")]
    NoFactors,

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("hamiltonian not hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("incompatible stationary bases: {0}")]
    IncompatibleBases(String),

    /// The chain operator annihilates the state: tr[K rho K^dag] <= tol_prob.
    #[error("null event (norm {norm:e})")]
    NullEvent { norm: f64 },

    #[error("incompatible proposition: {0}")]
    IncompatibleProposition(String),

    #[error("conditioning on null event (probability {0:e})")]
    ConditioningOnNull(f64),

    #[error("invalid proposition: {0}")]
    InvalidProposition(String),

    #[error("proposition too complex: {0}")]
    TooComplex(String),

    #[error("enumeration too large: {size} exceeds limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("history does not cover proposition at time {0}")]
    MissingTime(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("null branch drawn {0} times in a row")]
    ResampleExhausted(u32),

    #[error("i/o: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
