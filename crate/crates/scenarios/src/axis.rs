//! Unit measurement axes and spin-1/2 eigenprojectors.

use std::sync::Arc;

use chaintrial_core::hilbert::{c, Basis, CMatrix, HilbertSpace};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScenarioError};

pub const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSetting {
    v: [f64; 3],
    role: Role,
}

impl AxisSetting {
    pub fn new(v: [f64; 3], role: Role) -> Result<Self> {
        let n = norm(v);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(ScenarioError::NotUnit(n));
        }
        Ok(Self { v, role })
    }

    pub fn normalized(v: [f64; 3], role: Role) -> Result<Self> {
        let n = norm(v);
        if !(n > 0.0 && n.is_finite()) {
            return Err(ScenarioError::NotUnit(n));
        }
        Ok(Self {
            v: v.map(|x| x / n),
            role,
        })
    }

    /// Unit vector at `angle` from +z towards +x.
    pub fn in_plane(angle: f64, role: Role) -> Self {
        Self {
            v: [angle.sin(), 0.0, angle.cos()],
            role,
        }
    }

    pub fn vector(&self) -> [f64; 3] {
        self.v
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dot(&self, other: &AxisSetting) -> f64 {
        self.v.iter().zip(&other.v).map(|(a, b)| a * b).sum()
    }

    pub(crate) fn expect_role(&self, role: Role) -> Result<()> {
        if self.role != role {
            return Err(ScenarioError::WrongRole {
                expected: role.to_string(),
                found: self.role.to_string(),
            });
        }
        Ok(())
    }

    /// `(I + a n.sigma) / 2` for outcome `a = +1` or `-1`.
    pub fn projector_matrix(&self, outcome: i8) -> CMatrix {
        let a = f64::from(outcome.signum());
        let [x, y, z] = self.v;
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + a * z), 0.0),
                c(0.5 * a * x, -0.5 * a * y),
                c(0.5 * a * x, 0.5 * a * y),
                c(0.5 * (1.0 - a * z), 0.0),
            ],
        )
    }

    /// Eigenbasis of `n.sigma` with labels `+` and `-`.
    pub fn basis(&self, spin: &Arc<HilbertSpace>) -> Result<Arc<Basis>> {
        let [x, y, z] = self.v;
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = Complex64::from_polar(1.0, phi);
        let m = CMatrix::from_row_slice(2, 2, &[c(ct, 0.0), -e.conj() * st, e * st, c(ct, 0.0)]);
        Ok(Basis::from_vectors(
            format!("{}({:.12},{:.12},{:.12})", self.role, x, y, z),
            spin,
            vec!["+".into(), "-".into()],
            m,
        )?)
    }
}

fn norm(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chaintrial_core::hilbert::max_abs;

    #[test]
    fn basis_columns_are_projector_ranges() {
        let spin = Arc::new(HilbertSpace::new(["up", "dn"]).unwrap());
        for v in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.6, 0.0, 0.8], [0.36, 0.48, 0.8]] {
            let a = AxisSetting::new(v, Role::Alice).unwrap();
            let b = a.basis(&spin).unwrap();
            for (k, outcome) in [(0, 1), (1, -1)] {
                let col = b.vector(k);
                let p = &col * col.adjoint();
                assert!(max_abs(&(p - a.projector_matrix(outcome))) < 1e-14);
            }
        }
        assert!(AxisSetting::new([1.0, 1.0, 0.0], Role::Bob).is_err());
    }
}
