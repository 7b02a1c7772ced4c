use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Core(#[from] chaintrial_core::Error),

    #[error("axis is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("axis role mismatch: expected {expected}, got {found}")]
    WrongRole { expected: String, found: String },

    #[error("triad is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Fock cutoff {cutoff} leaves tail mass {tail:e} above 1e-6")]
    CutoffTooSmall { cutoff: usize, tail: f64 },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;
