//! A field mode with Fock cutoff `K` coupled to a two-manifold atom (one
//! bound level, `F` upper levels) in the rotating-wave approximation.
//! Absorption lowers the photon number by one and lifts the atom; the
//! excitation number is conserved.
//!
//! Per trial, 'ionized,t' is the atom in the upper manifold at `t` with the
//! bound level at 0, and 'absorbed,t' is the field in `|0>` at `t` with
//! `|1>` at 0.

use std::sync::Arc;

use chaintrial_core::hilbert::{c, tensor_product, Basis, CMatrix, CVector, DensityOperator, HilbertSpace, Propagator, StationarySet};
use chaintrial_core::propositions::{Evaluator, Proposition};
use chaintrial_core::sampler::{Granularity, SamplerOptions, ScheduleStep, TrialRecord};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScenarioError};
use crate::relation::sample_with_bits;

pub const MAX_TAIL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldInit {
    Vacuum,
    Fock { n: usize },
    /// Real amplitude `alpha`.
    Coherent { alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LightQuantumConfig {
    /// Fock cutoff `K`: photon numbers `0..K`.
    pub field_dim: usize,
    /// Upper atomic levels `F`.
    pub upper_levels: usize,
    pub spacing: f64,
    pub coupling: f64,
    /// Observation time `t`.
    pub time: f64,
    pub initial: FieldInit,
}

impl Default for LightQuantumConfig {
    fn default() -> Self {
        Self {
            field_dim: 12,
            upper_levels: 10,
            spacing: 1.0,
            coupling: 0.35,
            time: 2.0,
            initial: FieldInit::Fock { n: 1 },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LightQuantumReport {
    pub n_trials: u64,
    pub seed: u64,
    pub agreements: u64,
    pub agreement_rate: f64,
    pub ionized_trials: u64,
    pub absorbed_trials: u64,
    pub pr_ionized: f64,
    pub pr_absorbed: f64,
    pub pr_both: f64,
    pub fock_tail: f64,
}

pub struct LightQuantum {
    pub cfg: LightQuantumConfig,
    pub space: Arc<HilbertSpace>,
    pub basis: Arc<Basis>,
    pub rho: DensityOperator,
    pub prop: Propagator,
    pub fock_tail: f64,
}

fn field_amplitudes(init: &FieldInit, k: usize) -> Result<(Vec<f64>, f64)> {
    let mut amps = vec![0.0; k];
    match *init {
        FieldInit::Vacuum => amps[0] = 1.0,
        FieldInit::Fock { n } => {
            if n >= k {
                return Err(ScenarioError::CutoffTooSmall { cutoff: k, tail: 1.0 });
            }
            amps[n] = 1.0;
        }
        FieldInit::Coherent { alpha } => {
            let mut a = (-alpha * alpha / 2.0).exp();
            for (n, slot) in amps.iter_mut().enumerate() {
                *slot = a;
                a *= alpha / ((n + 1) as f64).sqrt();
            }
            let kept: f64 = amps.iter().map(|x| x * x).sum();
            let tail = (1.0 - kept).max(0.0);
            if tail > MAX_TAIL {
                return Err(ScenarioError::CutoffTooSmall { cutoff: k, tail });
            }
            let norm = kept.sqrt();
            amps.iter_mut().for_each(|x| *x /= norm);
            return Ok((amps, tail));
        }
    }
    Ok((amps, 0.0))
}

pub fn build_light_quantum(cfg: LightQuantumConfig) -> Result<LightQuantum> {
    let (k, f) = (cfg.field_dim, cfg.upper_levels);
    if k < 2 || f < 1 || !(cfg.time >= 0.0) {
        return Err(ScenarioError::InvalidConfig(format!(
            "field_dim {k}, upper_levels {f}, time {}",
            cfg.time
        )));
    }
    let field = HilbertSpace::new((0..k).map(|n| format!("n{n}")))?;
    let atom = HilbertSpace::new(std::iter::once("1s".to_string()).chain((0..f).map(|m| format!("e{m}"))))?;
    let a_dim = f + 1;
    let space = Arc::new(tensor_product(&[field, atom])?);
    let basis = Basis::computational(&space);
    let d = k * a_dim;
    let idx = |n: usize, level: usize| n * a_dim + level;
    let mut h = CMatrix::zeros(d, d);
    for n in 0..k {
        for m in 0..f {
            let e = (m as f64 - (f as f64 - 1.0) / 2.0) * cfg.spacing;
            h[(idx(n, m + 1), idx(n, m + 1))] = c(e, 0.0);
            if n >= 1 {
                // |n, 1s> <-> |n-1, e_m> with amplitude g sqrt(n).
                let v = c(cfg.coupling * (n as f64).sqrt(), 0.0);
                h[(idx(n - 1, m + 1), idx(n, 0))] = v;
                h[(idx(n, 0), idx(n - 1, m + 1))] = v;
            }
        }
    }
    let prop = Propagator::new(&space, h)?;
    let (amps, fock_tail) = field_amplitudes(&cfg.initial, k)?;
    let mut ket = CVector::zeros(d);
    for (n, a) in amps.iter().enumerate() {
        ket[idx(n, 0)] = c(*a, 0.0);
    }
    let rho = DensityOperator::pure(&space, &ket)?;
    Ok(LightQuantum {
        cfg,
        space,
        basis,
        rho,
        prop,
        fock_tail,
    })
}

impl LightQuantum {
    fn a_dim(&self) -> usize {
        self.cfg.upper_levels + 1
    }

    fn set(&self, keep: impl Fn(usize, usize) -> bool) -> Result<StationarySet> {
        let a = self.a_dim();
        Ok(StationarySet::new(&self.basis, (0..self.space.dim()).filter(|&i| keep(i / a, i % a)))?)
    }

    pub fn ionized(&self) -> Result<Proposition> {
        let t = self.cfg.time;
        Ok(Proposition::atom(self.set(|_, l| l > 0)?, t).and(Proposition::atom(self.set(|_, l| l == 0)?, 0.0)))
    }

    pub fn absorbed(&self) -> Result<Proposition> {
        let t = self.cfg.time;
        Ok(Proposition::atom(self.set(|n, _| n == 0)?, t).and(Proposition::atom(self.set(|n, _| n == 1)?, 0.0)))
    }

    pub fn sample(&self, n_trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
        let props = vec![("ionized".to_string(), self.ionized()?), ("absorbed".to_string(), self.absorbed()?)];
        let steps = [0.0, self.cfg.time]
            .map(|time| ScheduleStep {
                time,
                basis: self.basis.clone(),
            })
            .to_vec();
        sample_with_bits(steps, Granularity::Fine, &self.rho, &self.prop, &props, n_trials, seed, SamplerOptions::default())
    }
}

/// Per-trial agreement of the two bits, with the exact probabilities.
pub fn light_quantum_test(cfg: LightQuantumConfig, n_trials: u64, seed: u64) -> Result<LightQuantumReport> {
    Ok(light_quantum_run(cfg, n_trials, seed)?.0)
}

/// [`light_quantum_test`] keeping the sampled trials.
pub fn light_quantum_run(cfg: LightQuantumConfig, n_trials: u64, seed: u64) -> Result<(LightQuantumReport, Vec<TrialRecord>)> {
    let lq = build_light_quantum(cfg)?;
    let records = lq.sample(n_trials, seed)?;
    let bit = |r: &TrialRecord, k: &str| r.bits[k];
    let agreements = records.iter().filter(|r| bit(r, "ionized") == bit(r, "absorbed")).count() as u64;
    let ev = Evaluator::new(&lq.rho, &lq.prop);
    let (ion, abs) = (lq.ionized()?, lq.absorbed()?);
    let report = LightQuantumReport {
        n_trials,
        seed,
        agreements,
        agreement_rate: agreements as f64 / n_trials as f64,
        ionized_trials: records.iter().filter(|r| bit(r, "ionized")).count() as u64,
        absorbed_trials: records.iter().filter(|r| bit(r, "absorbed")).count() as u64,
        pr_ionized: ev.probability(&ion)?,
        pr_absorbed: ev.probability(&abs)?,
        pr_both: ev.probability(&ion.and(abs))?,
        fock_tail: lq.fock_tail,
    };
    Ok((report, records))
}
