//! Spin-1 measurement settings. For an orthonormal triad `(u1, u2, u3)`,
//! the squared spin components along the `u_i` commute, and the projector
//! onto `S_{u_i} = 0` is `|u_i><u_i|` in the Cartesian basis.

use std::sync::Arc;

use chaintrial_core::compat::{CompatChecker, CompatVerdict};
use chaintrial_core::hilbert::{c, max_abs, Basis, CMatrix, DensityOperator, HilbertSpace, StationarySet};
use serde::Serialize;

use crate::error::{Result, ScenarioError};

pub type Triad = [[f64; 3]; 3];

pub struct Spin1Setting {
    pub name: String,
    pub triad: Triad,
    pub basis: Arc<Basis>,
}

impl Spin1Setting {
    /// The three rank-1 sets, one per axis.
    pub fn sets(&self) -> Vec<StationarySet> {
        (0..3)
            .map(|i| StationarySet::singleton(&self.basis, i).expect("index in range"))
            .collect()
    }
}

pub struct Spin1 {
    pub space: Arc<HilbertSpace>,
    pub settings: Vec<Spin1Setting>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    /// `(setting, axis)` of each member.
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub verdict: CompatVerdict,
}

pub fn build_spin1_settings(triads: &[Triad]) -> Result<Spin1> {
    let space = Arc::new(HilbertSpace::new(["x", "y", "z"])?);
    let settings = triads
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let m = CMatrix::from_fn(3, 3, |r, col| c(t[col][r], 0.0));
            let defect = max_abs(&(m.adjoint() * &m - CMatrix::identity(3, 3)));
            if defect > 1e-12 {
                return Err(ScenarioError::NotOrthonormal(defect));
            }
            let name = format!("s{k}");
            let labels = (1..=3).map(|i| format!("{name}:u{i}")).collect();
            Ok(Spin1Setting {
                basis: Basis::from_vectors(name.clone(), &space, labels, m)?,
                name,
                triad: *t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spin1 { space, settings })
}

impl Spin1 {
    /// All sets of the chosen settings, checked as one family.
    pub fn family_verdict(&self, settings: &[usize], rho: &DensityOperator, max_len: usize) -> Result<CompatVerdict> {
        let sets: Vec<StationarySet> = settings.iter().flat_map(|&k| self.settings[k].sets()).collect();
        let checker = CompatChecker {
            max_len,
            ..CompatChecker::default()
        };
        Ok(checker.check_sets(&sets, std::slice::from_ref(rho.matrix()))?)
    }

    /// Verdict for every cross pair of projectors of two settings.
    pub fn pair_verdicts(&self, a: usize, b: usize, rho: &DensityOperator) -> Result<Vec<PairVerdict>> {
        let checker = CompatChecker::default();
        let (sa, sb) = (self.settings[a].sets(), self.settings[b].sets());
        let mut out = Vec::new();
        for (i, p) in sa.iter().enumerate() {
            for (j, q) in sb.iter().enumerate() {
                let v = checker.classify_pair(&p.projector(), &q.projector(), rho)?;
                out.push(PairVerdict {
                    first: (a, i),
                    second: (b, j),
                    verdict: v,
                });
            }
        }
        Ok(out)
    }
}

/// Rows of the rotation by `angle` about `axis`, applied to the Cartesian
/// triad.
pub fn rotated_triad(axis: [f64; 3], angle: f64) -> Triad {
    let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [kx, ky, kz] = axis.map(|x| x / n);
    let (s, co) = angle.sin_cos();
    let t = 1.0 - co;
    let r = [
        [co + kx * kx * t, kx * ky * t - kz * s, kx * kz * t + ky * s],
        [ky * kx * t + kz * s, co + ky * ky * t, ky * kz * t - kx * s],
        [kz * kx * t - ky * s, kz * ky * t + kx * s, co + kz * kz * t],
    ];
    // Column i of R is the image of e_i.
    [0, 1, 2].map(|i| [r[0][i], r[1][i], r[2][i]])
}
