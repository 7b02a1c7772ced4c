//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// Absolute max-norm tolerance for operator identities.
pub const TOL_ALGEBRA: f64 = 1e-10;
/// Probabilities at or below this are null events.
pub const TOL_PROB: f64 = 1e-12;
/// Ordering residual above which a family is incompatible.
pub const TOL_COMPAT: f64 = 1e-9;
/// Distance from 0 or 1 under which a probability counts as deterministic.
pub const TOL_DET: f64 = 1e-9;
/// Times closer than this are treated as the same instant.
pub const TOL_TIME: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub algebra: f64,
    pub prob: f64,
    pub compat: f64,
    pub det: f64,
    pub time: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: TOL_ALGEBRA,
            prob: TOL_PROB,
            compat: TOL_COMPAT,
            det: TOL_DET,
            time: TOL_TIME,
        }
    }
}

impl Tolerances {
    pub(crate) fn is_deterministic(&self, p: f64) -> bool {
        p.abs() <= self.det || (1.0 - p).abs() <= self.det
    }

    pub(crate) fn same_time(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.time
    }
}
