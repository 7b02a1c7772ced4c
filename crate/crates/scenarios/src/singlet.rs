//! Spin singlet shared by two parties, and the CHSH combination.

use std::sync::Arc;

use chaintrial_core::hilbert::{born_probability, c, tensor_product, Basis, CMatrix, CVector, DensityOperator, HilbertSpace, Projector, Propagator};
use chaintrial_core::propositions::{probability, Proposition};
use chaintrial_core::rng::{domain, substream};
use chaintrial_core::sampler::{Granularity, SamplerOptions, ScheduleStep, TrialRecord};
use chaintrial_core::hilbert::StationarySet;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::axis::{AxisSetting, Role};
use crate::error::Result;
use crate::relation::{exclusivity_violations, sample_with_bits};

pub struct Singlet {
    spin: Arc<HilbertSpace>,
    space: Arc<HilbertSpace>,
    rho: DensityOperator,
    prop: Propagator,
}

/// `(|up,dn> - |dn,up>) / sqrt 2` on two spin-1/2 factors, with no dynamics.
pub fn build_singlet() -> Result<Singlet> {
    let spin = Arc::new(HilbertSpace::new(["up", "dn"])?);
    let space = Arc::new(tensor_product(&[(*spin).clone(), (*spin).clone()])?);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ket = CVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
    let rho = DensityOperator::pure(&space, &ket)?;
    let prop = Propagator::free(&space);
    Ok(Singlet {
        spin,
        space,
        rho,
        prop,
    })
}

fn outcome_index(outcome: i8) -> usize {
    usize::from(outcome < 0)
}

impl Singlet {
    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    /// Outcome projector of one party, embedded in the pair space.
    pub fn projector(&self, axis: &AxisSetting, outcome: i8) -> Result<Projector> {
        let p = axis.projector_matrix(outcome);
        let id = CMatrix::identity(2, 2);
        let m = match axis.role() {
            Role::Alice => p.kronecker(&id),
            Role::Bob => id.kronecker(&p),
        };
        Ok(Projector::new(&self.space, m)?)
    }

    /// Product eigenbasis for Alice along `x` and Bob along `y`.
    pub fn pair_basis(&self, x: &AxisSetting, y: &AxisSetting) -> Result<Arc<Basis>> {
        x.expect_role(Role::Alice)?;
        y.expect_role(Role::Bob)?;
        let (bx, by) = (x.basis(&self.spin)?, y.basis(&self.spin)?);
        Ok(Basis::tensor(format!("{}⊗{}", bx.name(), by.name()), &[&bx, &by])?)
    }

    /// Atom "Alice finds `a` along x and Bob finds `b` along y" at t = 0.
    /// `None` leaves that party unconstrained.
    pub fn outcome_atom(&self, x: &AxisSetting, y: &AxisSetting, a: Option<i8>, b: Option<i8>) -> Result<Proposition> {
        let basis = self.pair_basis(x, y)?;
        let members = (0..4).filter(|i| {
            a.map_or(true, |a| i / 2 == outcome_index(a)) && b.map_or(true, |b| i % 2 == outcome_index(b))
        });
        Ok(Proposition::atom(StationarySet::new(&basis, members)?, 0.0))
    }

    /// `Pr(a, b)` from the proposition calculus.
    pub fn joint_probability(&self, x: &AxisSetting, y: &AxisSetting, a: i8, b: i8) -> Result<f64> {
        Ok(probability(&self.outcome_atom(x, y, Some(a), Some(b))?, &self.rho, &self.prop)?)
    }

    /// `<AB> = sum_ab a b tr[(P_a(x) (x) P_b(y)) rho]`.
    pub fn correlator(&self, x: &AxisSetting, y: &AxisSetting) -> Result<f64> {
        x.expect_role(Role::Alice)?;
        y.expect_role(Role::Bob)?;
        let mut e = 0.0;
        for a in [1i8, -1] {
            for b in [1i8, -1] {
                let op = self.projector(x, a)?.matrix() * self.projector(y, b)?.matrix();
                e += f64::from(a * b) * born_probability(&op, &self.rho)?;
            }
        }
        Ok(e)
    }

    /// `n` trials measuring along `(x, y)`, with bits `A+` and `B+`.
    pub fn sample_pairs(&self, x: &AxisSetting, y: &AxisSetting, n: u64, seed: u64) -> Result<Vec<TrialRecord>> {
        let basis = self.pair_basis(x, y)?;
        let props = vec![
            ("A+".to_string(), self.outcome_atom(x, y, Some(1), None)?),
            ("B+".to_string(), self.outcome_atom(x, y, None, Some(1))?),
        ];
        sample_with_bits(
            vec![ScheduleStep { time: 0.0, basis }],
            Granularity::Fine,
            &self.rho,
            &self.prop,
            &props,
            n,
            seed,
            SamplerOptions::default(),
        )
    }
}

/// Outcome product `a b` of a sampled pair trial.
pub fn pair_product(r: &TrialRecord) -> i8 {
    let sign = |k: &str| if r.bits[k] { 1 } else { -1 };
    sign("A+") * sign("B+")
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChshAxes {
    pub x1: AxisSetting,
    pub x2: AxisSetting,
    pub y1: AxisSetting,
    pub y2: AxisSetting,
}

impl ChshAxes {
    /// Alice at 0 and 90 degrees, Bob at 45 and 135 degrees, in one plane.
    pub fn optimal() -> Self {
        let d = std::f64::consts::FRAC_PI_4;
        Self {
            x1: AxisSetting::in_plane(0.0, Role::Alice),
            x2: AxisSetting::in_plane(2.0 * d, Role::Alice),
            y1: AxisSetting::in_plane(d, Role::Bob),
            y2: AxisSetting::in_plane(3.0 * d, Role::Bob),
        }
    }

    /// Correlator pairs in the order `(x1,y1), (x2,y1), (x2,y2), (x1,y2)`
    /// with their signs in S.
    pub fn terms(&self) -> [(AxisSetting, AxisSetting, f64); 4] {
        [
            (self.x1, self.y1, 1.0),
            (self.x2, self.y1, 1.0),
            (self.x2, self.y2, 1.0),
            (self.x1, self.y2, -1.0),
        ]
    }
}

/// `|E(x1,y1) + E(x2,y1) + E(x2,y2) - E(x1,y2)|` from projector expectations.
pub fn chsh_value(s: &Singlet, axes: &ChshAxes) -> Result<f64> {
    let mut total = 0.0;
    for (x, y, sign) in axes.terms() {
        total += sign * s.correlator(&x, &y)?;
    }
    Ok(total.abs())
}

/// Closed form with `E = -x.y`.
pub fn chsh_dot(axes: &ChshAxes) -> f64 {
    (axes.x1.dot(&axes.y1) + axes.y1.dot(&axes.x2) + axes.x2.dot(&axes.y2) - axes.y2.dot(&axes.x1)).abs()
}

fn random_unit(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return v.map(|x| x / n2.sqrt());
        }
    }
}

pub fn random_axis(rng: &mut impl Rng, role: Role) -> AxisSetting {
    AxisSetting::normalized(random_unit(rng), role).expect("non-zero vector")
}

/// Largest `chsh_value` over `n` random axis quadruples.
pub fn chsh_random_search(s: &Singlet, n: u64, seed: u64) -> Result<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::TRIALS, i);
            let axes = ChshAxes {
                x1: random_axis(&mut rng, Role::Alice),
                x2: random_axis(&mut rng, Role::Alice),
                y1: random_axis(&mut rng, Role::Bob),
                y2: random_axis(&mut rng, Role::Bob),
            };
            chsh_value(s, &axes)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledCorrelator {
    pub seed: u64,
    pub n_trials: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampledChsh {
    pub correlators: Vec<SampledCorrelator>,
    pub s: f64,
    pub stderr: f64,
    /// Summed over the four populations.
    pub exclusivity_violations: usize,
}

/// S from four disjoint trial populations. Each correlator draws from its
/// own seed derived from the master seed.
pub fn sample_chsh(s: &Singlet, axes: &ChshAxes, n: u64, seed: u64) -> Result<SampledChsh> {
    let mut correlators = Vec::with_capacity(4);
    let (mut total, mut var, mut violations) = (0.0, 0.0, 0);
    for (k, (x, y, sign)) in axes.terms().into_iter().enumerate() {
        let sub_seed: u64 = substream(seed, domain::CORRELATOR_BASE + k as u64, 0).random();
        let records = s.sample_pairs(&x, &y, n, sub_seed)?;
        violations += exclusivity_violations(&records);
        let mean = records.iter().map(|r| f64::from(pair_product(r))).sum::<f64>() / n as f64;
        let stderr = ((1.0 - mean * mean).max(0.0) / n as f64).sqrt();
        total += sign * mean;
        var += stderr * stderr;
        correlators.push(SampledCorrelator {
            seed: sub_seed,
            n_trials: n,
            mean,
            stderr,
        });
    }
    Ok(SampledChsh {
        correlators,
        s: total.abs(),
        stderr: var.sqrt(),
        exclusivity_violations: violations,
    })
}
