//! One bound level coupled uniformly to `M` equally spaced upper levels, the
//! drive folded into a time-independent rotating-frame Hamiltonian. The
//! bound population decays at the golden-rule rate `2 pi g^2 / dE` until the
//! recurrence time `2 pi / dE`.

use std::sync::Arc;

use chaintrial_core::hilbert::{c, Basis, CMatrix, DensityOperator, HilbertSpace, Propagator, StationarySet};
use chaintrial_core::propositions::{Evaluator, Proposition};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScenarioError};

pub const MIN_LEVELS: usize = 64;
/// Validity ratios at or above this mean the continuum is too coarse.
pub const COARSE_CONTINUUM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorToyConfig {
    /// Upper levels `M`.
    pub levels: usize,
    /// Level spacing `dE`.
    pub spacing: f64,
    /// Uniform coupling `g`.
    pub coupling: f64,
    /// Centre of the upper band relative to the bound level.
    #[serde(default)]
    pub detuning: f64,
}

impl Default for DetectorToyConfig {
    fn default() -> Self {
        Self {
            levels: 256,
            spacing: 0.1,
            coupling: 0.15,
            detuning: 0.0,
        }
    }
}

impl DetectorToyConfig {
    pub fn golden_rule_rate(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.coupling * self.coupling / self.spacing
    }

    /// `gamma / (M dE)`: decay width over band width.
    pub fn validity_ratio(&self) -> f64 {
        self.golden_rule_rate() / (self.levels as f64 * self.spacing)
    }

    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        if self.levels < MIN_LEVELS {
            return Err(ScenarioError::InvalidConfig(format!(
                "{} upper levels; at least {MIN_LEVELS} are needed for a quasi-continuum",
                self.levels
            )));
        }
        if !(self.spacing > 0.0 && self.coupling >= 0.0 && self.detuning.is_finite()) {
            return Err(ScenarioError::InvalidConfig("spacing must be positive and coupling non-negative".into()));
        }
        let mut warnings = Vec::new();
        let ratio = self.validity_ratio();
        if ratio >= COARSE_CONTINUUM {
            warnings.push(format!("continuum too coarse: validity ratio {ratio:.3}"));
        }
        Ok(warnings)
    }
}

pub struct DetectorToy {
    pub cfg: DetectorToyConfig,
    pub space: Arc<HilbertSpace>,
    pub basis: Arc<Basis>,
    pub rho: DensityOperator,
    pub prop: Propagator,
    pub bound: StationarySet,
    pub upper: StationarySet,
    pub warnings: Vec<String>,
}

pub fn upper_energy(cfg: &DetectorToyConfig, m: usize) -> f64 {
    cfg.detuning + (m as f64 - (cfg.levels as f64 - 1.0) / 2.0) * cfg.spacing
}

pub fn hamiltonian(cfg: &DetectorToyConfig) -> CMatrix {
    let d = cfg.levels + 1;
    let mut h = CMatrix::zeros(d, d);
    for m in 0..cfg.levels {
        h[(m + 1, m + 1)] = c(upper_energy(cfg, m), 0.0);
        h[(0, m + 1)] = c(cfg.coupling, 0.0);
        h[(m + 1, 0)] = c(cfg.coupling, 0.0);
    }
    h
}

pub fn build_detector_toy(cfg: DetectorToyConfig) -> Result<DetectorToy> {
    let warnings = cfg.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let labels = std::iter::once("bound".to_string()).chain((0..cfg.levels).map(|m| format!("e{m}")));
    let space = Arc::new(HilbertSpace::new(labels)?);
    let basis = Basis::computational(&space);
    let rho = DensityOperator::basis_state(&space, 0)?;
    let prop = Propagator::new(&space, hamiltonian(&cfg))?;
    let bound = StationarySet::singleton(&basis, 0)?;
    let upper = bound.complement();
    Ok(DetectorToy {
        cfg,
        space,
        basis,
        rho,
        prop,
        bound,
        upper,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub gamma_fit: f64,
    pub gamma_golden: f64,
    pub relative_error: f64,
}

impl DetectorToy {
    /// Upper manifold occupied at `t`, bound level occupied at 0.
    pub fn ionized(&self, t: f64) -> Proposition {
        Proposition::atom(self.upper.clone(), t).and(Proposition::atom(self.bound.clone(), 0.0))
    }

    /// Bound-level survival `|<b| U(t) |b>|^2`. For the bound initial state this
    /// equals the probability of `!ionized(t)`; see [`Self::survival_by_proposition`].
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(ScenarioError::InvalidConfig(format!("time {t} is not finite")));
        }
        Ok(self.prop.amplitude(0, 0, t).norm_sqr())
    }

    /// Same quantity evaluated through the proposition calculus; O(d^3) per call.
    pub fn survival_by_proposition(&self, t: f64) -> Result<f64> {
        Ok(Evaluator::new(&self.rho, &self.prop).probability(&!self.ionized(t))?)
    }

    /// Least-squares slope of `-ln(survival)` over `[lo/gamma, hi/gamma]`.
    pub fn fit_decay(&self, lo: f64, hi: f64, points: usize) -> Result<DecayFit> {
        let gamma = self.cfg.golden_rule_rate();
        if points < 2 || !(gamma > 0.0) {
            return Err(ScenarioError::InvalidConfig("need a positive rate and at least two points".into()));
        }
        let times: Vec<f64> = (0..points)
            .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64) / gamma)
            .collect();
        let survival = times.iter().map(|&t| self.survival(t)).collect::<Result<Vec<_>>>()?;
        let logs: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
        let n = points as f64;
        let (mt, ml) = (times.iter().sum::<f64>() / n, logs.iter().sum::<f64>() / n);
        let cov: f64 = times.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
        let var: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
        let gamma_fit = -cov / var;
        Ok(DecayFit {
            times,
            survival,
            gamma_fit,
            gamma_golden: gamma,
            relative_error: (gamma_fit / gamma - 1.0).abs(),
        })
    }
}
