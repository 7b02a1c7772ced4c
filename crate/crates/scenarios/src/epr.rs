//! Two particles on a periodic lattice in the maximally correlated state
//! `sum_k |k>_A |k + r0>_B / sqrt N`. Momentum states are the discrete
//! Fourier transform of the sites; in momentum the state pairs `q` with `-q`.

use std::f64::consts::PI;
use std::sync::Arc;

use chaintrial_core::hilbert::{c, tensor_product, Basis, CMatrix, CVector, DensityOperator, HilbertSpace, Propagator, StationarySet};
use chaintrial_core::propositions::Proposition;
use chaintrial_core::sampler::{coarse_schedule, Granularity, SamplerOptions, TrialRecord};
use chaintrial_core::Tolerances;
use num_complex::Complex64;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScenarioError};
use crate::relation::{relation_report, sample_with_bits, RelationReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Sites per particle, a power of two.
    pub sites: usize,
    /// Lattice spacing.
    #[serde(default = "unit")]
    pub spacing: f64,
    /// B sits `offset` sites from A.
    pub offset: i64,
    /// Sites per position cell.
    pub cell_sites: usize,
    /// Momentum bins per momentum cell.
    pub cell_momenta: usize,
}

fn unit() -> f64 {
    1.0
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            sites: 16,
            spacing: 1.0,
            offset: 4,
            cell_sites: 4,
            cell_momenta: 4,
        }
    }
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ScenarioError::InvalidLattice(m));
        if self.sites < 8 || !self.sites.is_power_of_two() {
            return bad(format!("{} sites: need a power of two >= 8", self.sites));
        }
        if !(self.spacing > 0.0) {
            return bad(format!("spacing {}", self.spacing));
        }
        for (name, w) in [("cell_sites", self.cell_sites), ("cell_momenta", self.cell_momenta)] {
            if w == 0 || self.sites % w != 0 {
                return bad(format!("{name} = {w} does not divide {}", self.sites));
            }
        }
        Ok(())
    }

    /// `(cell_sites a) (cell_momenta 2 pi / (N a))` over the lattice
    /// equivalent of hbar, `2 pi / N`.
    pub fn complementarity_ratio(&self) -> f64 {
        (self.cell_sites * self.cell_momenta) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Particle {
    A,
    B,
}

pub struct EprLattice {
    pub cfg: LatticeConfig,
    pub space: Arc<HilbertSpace>,
    pub rho: DensityOperator,
    pub prop: Propagator,
    pub position: Arc<Basis>,
    pub momentum: Arc<Basis>,
}

/// Columns are `|p_q> = sum_x e^{2 pi i q x / N} |x> / sqrt N`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |x, q| Complex64::from_polar(s, 2.0 * PI * (q * x) as f64 / n as f64))
}

/// Signed momentum index in `[-N/2, N/2)`.
pub fn centered(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

pub fn build_epr_lattice(cfg: LatticeConfig) -> Result<EprLattice> {
    cfg.validate()?;
    let n = cfg.sites;
    let single = HilbertSpace::new((0..n).map(|x| format!("x{x}")))?;
    let space = Arc::new(tensor_product(&[single.clone(), single.clone()])?);
    let single = Arc::new(single);
    let mut ket = CVector::zeros(n * n);
    let amp = c(1.0 / (n as f64).sqrt(), 0.0);
    for k in 0..n {
        let kb = (k as i64 + cfg.offset).rem_euclid(n as i64) as usize;
        ket[k * n + kb] = amp;
    }
    let rho = DensityOperator::pure(&space, &ket)?;
    let prop = Propagator::free(&space);
    let site_basis = Basis::computational(&single);
    let position = Basis::tensor("position", &[&site_basis, &site_basis])?;
    let p_labels = (0..n).map(|q| format!("p{}", centered(q, n))).collect();
    let p1 = Basis::from_vectors("momentum1", &single, p_labels, dft_matrix(n))?;
    let momentum = Basis::tensor("momentum", &[&p1, &p1])?;
    Ok(EprLattice {
        cfg,
        space,
        rho,
        prop,
        position,
        momentum,
    })
}

impl EprLattice {
    fn n(&self) -> usize {
        self.cfg.sites
    }

    fn pair_set(&self, basis: &Arc<Basis>, who: Particle, members: &[usize]) -> Result<StationarySet> {
        let n = self.n();
        let idx = (0..n * n).filter(|i| {
            let own = match who {
                Particle::A => i / n,
                Particle::B => i % n,
            };
            members.contains(&own)
        });
        Ok(StationarySet::new(basis, idx)?)
    }

    pub fn position_cells(&self) -> usize {
        self.n() / self.cfg.cell_sites
    }

    pub fn momentum_cells(&self) -> usize {
        self.n() / self.cfg.cell_momenta
    }

    /// Sites `[c w, (c + 1) w)` of one particle.
    pub fn position_cell(&self, who: Particle, cell: usize) -> Result<StationarySet> {
        let w = self.cfg.cell_sites;
        let members: Vec<usize> = (cell * w..(cell + 1) * w).collect();
        self.pair_set(&self.position, who, &members)
    }

    /// Signed momenta `[-N/2 + c w, -N/2 + (c + 1) w)` of one particle.
    pub fn momentum_cell_members(&self, cell: usize) -> Vec<usize> {
        let (n, w) = (self.n(), self.cfg.cell_momenta);
        (0..n)
            .filter(|&q| ((centered(q, n) + n as i64 / 2) as usize) / w == cell)
            .collect()
    }

    pub fn momentum_set(&self, who: Particle, members: &[usize]) -> Result<StationarySet> {
        self.pair_set(&self.momentum, who, members)
    }

    /// B's position cell matching A's cell `c`; the offset must be a whole
    /// number of cells.
    pub fn partner_position_cell(&self, cell: usize) -> Result<usize> {
        let w = self.cfg.cell_sites as i64;
        if self.cfg.offset % w != 0 {
            return Err(ScenarioError::InvalidLattice(format!(
                "offset {} is not a multiple of the cell width {w}",
                self.cfg.offset
            )));
        }
        let cells = self.position_cells() as i64;
        Ok((cell as i64 + self.cfg.offset / w).rem_euclid(cells) as usize)
    }

    /// Named propositions `A:x<c>` and `B:x<c'>` for every position cell.
    pub fn position_propositions(&self) -> Result<Vec<((String, Proposition), (String, Proposition))>> {
        (0..self.position_cells())
            .map(|cell| {
                let partner = self.partner_position_cell(cell)?;
                Ok((
                    (format!("A:x{cell}"), Proposition::atom(self.position_cell(Particle::A, cell)?, 0.0)),
                    (format!("B:x{partner}"), Proposition::atom(self.position_cell(Particle::B, partner)?, 0.0)),
                ))
            })
            .collect()
    }

    /// Named propositions `A:p<c>` and `B:-p<c>` (the negated momenta of
    /// the same cell) for every momentum cell.
    pub fn momentum_propositions(&self) -> Result<Vec<((String, Proposition), (String, Proposition))>> {
        let n = self.n();
        (0..self.momentum_cells())
            .map(|cell| {
                let members = self.momentum_cell_members(cell);
                let negated: Vec<usize> = members.iter().map(|&q| (n - q) % n).collect();
                Ok((
                    (format!("A:p{cell}"), Proposition::atom(self.momentum_set(Particle::A, &members)?, 0.0)),
                    (format!("B:-p{cell}"), Proposition::atom(self.momentum_set(Particle::B, &negated)?, 0.0)),
                ))
            })
            .collect()
    }

    /// Samples the registered pairs and reports each claimed relation.
    pub fn relations(
        &self,
        pairs: &[((String, Proposition), (String, Proposition))],
        n_trials: u64,
        seed: u64,
        tol: &Tolerances,
    ) -> Result<(Vec<RelationReport>, Vec<TrialRecord>)> {
        let props: Vec<(String, Proposition)> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let refs: Vec<&Proposition> = props.iter().map(|(_, p)| p).collect();
        let (steps, cells) = coarse_schedule(&refs, tol)?;
        let options = SamplerOptions {
            tol: *tol,
            ..SamplerOptions::default()
        };
        let records = sample_with_bits(steps, Granularity::Coarse(cells), &self.rho, &self.prop, &props, n_trials, seed, options)?;
        let reports = pairs
            .iter()
            .map(|((ia, pa), (ib, pb))| relation_report(&self.rho, &self.prop, (ia, pa), (ib, pb), &records, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok((reports, records))
    }
}

/// True iff every registered relation holds.
pub fn classical_description(reports: &[RelationReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.holds)
}

#[derive(Clone, Debug, Serialize)]
pub struct EhrenfestReport {
    pub times: Vec<f64>,
    pub mean_positions: Vec<f64>,
    pub fitted_velocity: f64,
    pub group_velocity: f64,
    /// Largest deviation of the mean position from the fitted line, sites.
    pub max_residual: f64,
}

/// Free Gaussian packet on a ring of `sites` with `E(k) = k^2 / 2`
/// (hbar = m = a = 1), started at the centre with wavenumber `k0`.
pub fn ehrenfest_check(sites: usize, sigma: f64, k0: f64, t_max: f64, steps: usize) -> Result<EhrenfestReport> {
    if !sites.is_power_of_two() || sites < 8 || steps < 2 {
        return Err(ScenarioError::InvalidLattice(format!("{sites} sites, {steps} steps")));
    }
    let space = Arc::new(HilbertSpace::with_dim(sites)?);
    let energies = (0..sites)
        .map(|q| {
            let k = 2.0 * PI * centered(q, sites) as f64 / sites as f64;
            0.5 * k * k
        })
        .collect();
    let prop = Propagator::from_eigen(&space, energies, dft_matrix(sites))?;
    let x0 = (sites / 2) as f64;
    let mut psi = CVector::from_fn(sites, |x, _| {
        let d = x as f64 - x0;
        Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x as f64)
    });
    psi /= c(psi.norm(), 0.0);
    let times: Vec<f64> = (0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect();
    let mean_positions: Vec<f64> = times
        .iter()
        .map(|&t| {
            let phi = &*prop.at(t) * &psi;
            phi.iter().enumerate().map(|(x, a)| x as f64 * a.norm_sqr()).sum()
        })
        .collect();
    let n = times.len() as f64;
    let (mt, mx) = (times.iter().sum::<f64>() / n, mean_positions.iter().sum::<f64>() / n);
    let cov: f64 = times.iter().zip(&mean_positions).map(|(t, x)| (t - mt) * (x - mx)).sum();
    let var: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = cov / var;
    let max_residual = times
        .iter()
        .zip(&mean_positions)
        .map(|(t, x)| (x - (mx + slope * (t - mt))).abs())
        .fold(0.0, f64::max);
    Ok(EhrenfestReport {
        times,
        mean_positions,
        fitted_velocity: slope,
        group_velocity: k0,
        max_residual,
    })
}
