//! Chain-operator probabilities, compatibility checks and trial sampling for
//! occupation propositions over finite-dimensional Hilbert spaces.

pub mod compat;
pub mod error;
pub mod hilbert;
pub mod propositions;
pub mod rng;
pub mod sampler;
pub mod tol;

pub use error::{Error, Result};
pub use tol::Tolerances;
