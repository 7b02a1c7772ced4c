//! Monte-Carlo sampling of histories and of proposition truth values.
//!
//! Fine mode draws one basis state per schedule step. Histories of
//! stationary states form a Markov chain: the first state is drawn from the
//! Born weights of `rho(t_1)` and each later state from
//! `|<b_j| U(t_{n+1} - t_n) |b_i>|^2`.
//!
//! Coarse mode draws one cell of a partition per step from the Born weights
//! of the conditional state after the cells drawn so far. Conditional states
//! are memoized per cell path. Within the drawn cell a representative basis
//! state is recorded, drawn from the diagonal of the conditional state.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compat::{CompatChecker, DEFAULT_MAX_SEQUENCE_LEN};
use crate::error::{Error, Result};
use crate::hilbert::{c, Basis, CMatrix, DensityOperator, Propagator, StationarySet};
use crate::propositions::Proposition;
use crate::rng::{domain, substream};
use crate::tol::Tolerances;

/// Consecutive null branches tolerated before a trial fails.
pub const MAX_RESAMPLES: u32 = 10;

#[derive(Clone, Debug)]
pub struct ScheduleStep {
    pub time: f64,
    pub basis: Arc<Basis>,
}

#[derive(Clone, Debug)]
pub enum Granularity {
    Fine,
    /// One partition of the step basis per schedule step.
    Coarse(Vec<Vec<StationarySet>>),
}

#[derive(Clone, Debug)]
pub struct HistoryEntry {
    pub time: f64,
    pub basis: Arc<Basis>,
    pub state: usize,
    /// Index of the drawn cell in coarse mode.
    pub cell: Option<usize>,
}

impl HistoryEntry {
    pub fn label(&self) -> &str {
        self.basis.label(self.state)
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub history: Vec<HistoryEntry>,
    pub coins: BTreeMap<String, bool>,
    pub bits: BTreeMap<String, bool>,
    pub resamples: u32,
}

#[derive(Clone, Debug)]
pub struct SamplerOptions {
    pub tol: Tolerances,
    pub max_len: usize,
    /// Skip the compatibility check of coarse partitions.
    pub unchecked: bool,
    /// Classical events drawn per trial, by tag.
    pub coins: BTreeMap<String, f64>,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_len: DEFAULT_MAX_SEQUENCE_LEN,
            unchecked: false,
            coins: BTreeMap::new(),
        }
    }
}

struct Transition {
    d_to: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

struct CoarseNode {
    /// Conditional state at the last step of the path.
    state: CMatrix,
    next_probs: Vec<f64>,
    next_cdf: Vec<f64>,
    rep_members: Vec<usize>,
    rep_cdf: Vec<f64>,
}

struct CoarseTree {
    cells: Vec<Vec<StationarySet>>,
    projectors: Vec<Vec<CMatrix>>,
    step_u: Vec<Arc<CMatrix>>,
    rho0: CMatrix,
    nodes: RwLock<HashMap<Vec<u32>, Arc<CoarseNode>>>,
}

enum Mode {
    Fine {
        first_probs: Vec<f64>,
        first_cdf: Vec<f64>,
        transitions: Vec<Transition>,
    },
    Coarse(CoarseTree),
}

pub struct HistorySampler {
    steps: Vec<ScheduleStep>,
    tol: Tolerances,
    coins: Vec<(String, f64)>,
    mode: Mode,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &x| {
            *acc += x.max(0.0);
            Some(*acc)
        })
        .collect()
}

/// Index drawn from a cumulative table; zero-weight entries are never drawn.
fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("non-empty distribution");
    let u = rng.random::<f64>() * total;
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        return i;
    }
    // u rounded up to the total: take the last entry with positive weight.
    (0..cdf.len())
        .rev()
        .find(|&j| cdf[j] > if j == 0 { 0.0 } else { cdf[j - 1] })
        .unwrap_or(cdf.len() - 1)
}

fn diag_re(m: &CMatrix) -> Vec<f64> {
    m.diagonal().iter().map(|z| z.re).collect()
}

impl HistorySampler {
    pub fn new(
        steps: Vec<ScheduleStep>,
        granularity: Granularity,
        rho: &DensityOperator,
        prop: &Propagator,
    ) -> Result<Self> {
        Self::with_options(steps, granularity, rho, prop, SamplerOptions::default())
    }

    pub fn with_options(
        steps: Vec<ScheduleStep>,
        granularity: Granularity,
        rho: &DensityOperator,
        prop: &Propagator,
        options: SamplerOptions,
    ) -> Result<Self> {
        let tol = options.tol;
        let d = prop.dim();
        if rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.dim(),
            });
        }
        for (i, s) in steps.iter().enumerate() {
            if s.basis.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.basis.dim(),
                });
            }
            if !s.time.is_finite() {
                return Err(Error::InvalidSchedule(format!("time {}", s.time)));
            }
            if i > 0 && s.time - steps[i - 1].time <= tol.time {
                return Err(Error::InvalidSchedule(
                    "times must be strictly increasing".into(),
                ));
            }
        }
        for (tag, &p) in &options.coins {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "probability {p} of '{tag}' outside [0, 1]"
                )));
            }
        }
        let mode = match granularity {
            Granularity::Fine => Self::fine_mode(&steps, rho, prop),
            Granularity::Coarse(cells) => {
                Self::coarse_mode(&steps, cells, rho, prop, &options)?
            }
        };
        Ok(Self {
            steps,
            tol,
            coins: options.coins.into_iter().collect(),
            mode,
        })
    }

    fn fine_mode(steps: &[ScheduleStep], rho: &DensityOperator, prop: &Propagator) -> Mode {
        let (first_probs, transitions) = match steps.first() {
            None => (vec![1.0], Vec::new()),
            Some(first) => {
                let b = first.basis.matrix();
                let rho_t = prop.evolve(rho, first.time);
                let first_probs = diag_re(&(b.adjoint() * rho_t.matrix() * &b));
                let transitions = steps
                    .windows(2)
                    .map(|w| {
                        let a = w[1].basis.matrix().adjoint()
                            * &*prop.at(w[1].time - w[0].time)
                            * w[0].basis.matrix();
                        let (d_to, d_from) = (a.nrows(), a.ncols());
                        let mut probs = Vec::with_capacity(d_from * d_to);
                        for i in 0..d_from {
                            probs.extend((0..d_to).map(|j| a[(j, i)].norm_sqr()));
                        }
                        let cdf = probs.chunks(d_to).flat_map(cumulative).collect();
                        Transition { d_to, probs, cdf }
                    })
                    .collect();
                (first_probs, transitions)
            }
        };
        Mode::Fine {
            first_cdf: cumulative(&first_probs),
            first_probs,
            transitions,
        }
    }

    fn coarse_mode(
        steps: &[ScheduleStep],
        cells: Vec<Vec<StationarySet>>,
        rho: &DensityOperator,
        prop: &Propagator,
        options: &SamplerOptions,
    ) -> Result<Mode> {
        if cells.len() != steps.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} partitions for {} steps",
                cells.len(),
                steps.len()
            )));
        }
        for (n, (step, part)) in steps.iter().zip(&cells).enumerate() {
            let mut seen = vec![false; step.basis.dim()];
            for cell in part {
                if !cell.basis().same_assignment(&step.basis) {
                    return Err(Error::InvalidSchedule(format!(
                        "cell basis '{}' differs from step basis '{}'",
                        cell.basis().name(),
                        step.basis.name()
                    )));
                }
                if cell.is_empty() {
                    return Err(Error::InvalidSchedule(format!("empty cell at step {n}")));
                }
                for &i in cell.members() {
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::InvalidSchedule(format!(
                            "overlapping cells at step {n}"
                        )));
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidSchedule(format!(
                    "cells do not cover the basis at step {n}"
                )));
            }
        }
        if !options.unchecked {
            let all: Vec<StationarySet> = cells.iter().flatten().cloned().collect();
            let states: Vec<CMatrix> = steps
                .iter()
                .map(|s| prop.evolve(rho, s.time).matrix().clone())
                .collect();
            let v = CompatChecker {
                tol: options.tol,
                max_len: options.max_len,
            }
            .check_sets(&all, &states)?;
            if !v.is_compatible() {
                return Err(Error::IncompatibleProposition(v.witness));
            }
        }
        let projectors = cells
            .iter()
            .map(|part| part.iter().map(StationarySet::projector_matrix).collect())
            .collect();
        let mut last = 0.0;
        let step_u = steps
            .iter()
            .map(|s| {
                let u = prop.at(s.time - last);
                last = s.time;
                u
            })
            .collect();
        Ok(Mode::Coarse(CoarseTree {
            cells,
            projectors,
            step_u,
            rho0: rho.matrix().clone(),
            nodes: RwLock::new(HashMap::new()),
        }))
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    /// Samples one trial; draws depend only on `(seed, trial_index)`.
    pub fn sample(&self, seed: u64, trial_index: u64) -> Result<TrialRecord> {
        let mut rng = substream(seed, domain::TRIALS, trial_index);
        let mut record = TrialRecord {
            trial_index,
            ..Default::default()
        };
        match &self.mode {
            Mode::Fine {
                first_probs,
                first_cdf,
                transitions,
            } => {
                if self.steps.is_empty() {
                    // nothing to draw
                } else {
                    let mut i = self.draw_checked(first_cdf, first_probs, &mut rng, &mut record)?;
                    self.push(&mut record, 0, i, None);
                    for (n, t) in transitions.iter().enumerate() {
                        let row = i * t.d_to..(i + 1) * t.d_to;
                        i = self.draw_checked(&t.cdf[row.clone()], &t.probs[row], &mut rng, &mut record)?;
                        self.push(&mut record, n + 1, i, None);
                    }
                }
            }
            Mode::Coarse(tree) => {
                let mut path: Vec<u32> = Vec::with_capacity(self.steps.len());
                for n in 0..self.steps.len() {
                    let node = tree.node(&path, self.tol)?;
                    let cell = self.draw_checked(&node.next_cdf, &node.next_probs, &mut rng, &mut record)?;
                    path.push(cell as u32);
                    let child = tree.node(&path, self.tol)?;
                    let r = draw(&child.rep_cdf, &mut rng);
                    self.push(&mut record, n, child.rep_members[r], Some(cell));
                }
            }
        }
        let mut coin_rng = substream(seed, domain::COINS, trial_index);
        for (tag, p) in &self.coins {
            record.coins.insert(tag.clone(), coin_rng.random::<f64>() < *p);
        }
        Ok(record)
    }

    fn draw_checked(
        &self,
        cdf: &[f64],
        probs: &[f64],
        rng: &mut ChaCha8Rng,
        record: &mut TrialRecord,
    ) -> Result<usize> {
        let mut attempts = 0;
        loop {
            let i = draw(cdf, rng);
            if probs[i] > self.tol.prob {
                return Ok(i);
            }
            attempts += 1;
            record.resamples += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(Error::ResampleExhausted(attempts));
            }
        }
    }

    fn push(&self, record: &mut TrialRecord, n: usize, state: usize, cell: Option<usize>) {
        let step = &self.steps[n];
        record.history.push(HistoryEntry {
            time: step.time,
            basis: step.basis.clone(),
            state,
            cell,
        });
    }

    /// Trials `0..n`, in order.
    pub fn sample_many(&self, seed: u64, n: u64) -> Result<Vec<TrialRecord>> {
        (0..n)
            .into_par_iter()
            .map(|i| self.sample(seed, i))
            .collect()
    }
}

impl CoarseTree {
    fn node(&self, path: &[u32], tol: Tolerances) -> Result<Arc<CoarseNode>> {
        if let Some(n) = self.nodes.read().expect("node cache poisoned").get(path) {
            return Ok(n.clone());
        }
        let node = Arc::new(self.build(path, tol)?);
        Ok(self
            .nodes
            .write()
            .expect("node cache poisoned")
            .entry(path.to_vec())
            .or_insert(node)
            .clone())
    }

    fn build(&self, path: &[u32], tol: Tolerances) -> Result<CoarseNode> {
        let (state, rep_members, rep_cdf) = match path.split_last() {
            None => (self.rho0.clone(), Vec::new(), Vec::new()),
            Some((&cell, parent_path)) => {
                let parent = self.node(parent_path, tol)?;
                let n = parent_path.len();
                let u = &self.step_u[n];
                let evolved = &**u * &parent.state * u.adjoint();
                let p = &self.projectors[n][cell as usize];
                let norm = parent.next_probs[cell as usize];
                if norm <= tol.prob {
                    return Err(Error::NullEvent { norm });
                }
                let state = p * evolved * p / c(norm, 0.0);
                let set = &self.cells[n][cell as usize];
                let iso = set.isometry();
                let rep = diag_re(&(iso.adjoint() * &state * &iso));
                (state, set.members().iter().copied().collect(), cumulative(&rep))
            }
        };
        let n = path.len();
        let next_probs: Vec<f64> = if n < self.cells.len() {
            let u = &self.step_u[n];
            let evolved = &**u * &state * u.adjoint();
            self.projectors[n]
                .iter()
                .map(|p| crate::hilbert::trace_product(p, &evolved).re.max(0.0))
                .collect()
        } else {
            Vec::new()
        };
        Ok(CoarseNode {
            next_cdf: cumulative(&next_probs),
            next_probs,
            state,
            rep_members,
            rep_cdf,
        })
    }
}

/// Fine-mode sample of a single trial.
pub fn sample_history(
    schedule: Vec<ScheduleStep>,
    rho: &DensityOperator,
    prop: &Propagator,
    seed: u64,
    trial_index: u64,
    granularity: Granularity,
) -> Result<TrialRecord> {
    HistorySampler::new(schedule, granularity, rho, prop)?.sample(seed, trial_index)
}

/// Truth value of a proposition on a sampled history.
pub fn truth_value(record: &TrialRecord, p: &Proposition, tol: &Tolerances) -> Result<bool> {
    Ok(match p {
        Proposition::Atom { set, time } => {
            let e = record
                .history
                .iter()
                .find(|e| tol.same_time(e.time, *time))
                .ok_or(Error::MissingTime(*time))?;
            if !e.basis.same_assignment(set.basis()) {
                return Err(Error::IncompatibleBases(format!(
                    "history basis '{}' vs atom basis '{}' at time {time}",
                    e.basis.name(),
                    set.basis().name()
                )));
            }
            set.contains(e.state)
        }
        Proposition::Not(q) => !truth_value(record, q, tol)?,
        Proposition::And(qs) => {
            let mut all = true;
            for q in qs {
                all &= truth_value(record, q, tol)?;
            }
            all
        }
        Proposition::Or(qs) => {
            let mut any = false;
            for q in qs {
                any |= truth_value(record, q, tol)?;
            }
            any
        }
        Proposition::Certain { tag, .. } => *record.coins.get(tag).ok_or_else(|| {
            Error::InvalidProposition(format!("no classical event '{tag}' in the record"))
        })?,
    })
}

/// Stores the truth value of each named proposition in `record.bits`.
pub fn evaluate_bits(
    record: &mut TrialRecord,
    props: &[(String, Proposition)],
    tol: &Tolerances,
) -> Result<()> {
    for (id, p) in props {
        let bit = truth_value(record, p, tol)?;
        record.bits.insert(id.clone(), bit);
    }
    Ok(())
}

/// Schedule and coarse partitions resolving every atom of the propositions.
/// Each time gets the cells of the Boolean algebra generated by its atoms.
pub fn coarse_schedule(
    props: &[&Proposition],
    tol: &Tolerances,
) -> Result<(Vec<ScheduleStep>, Vec<Vec<StationarySet>>)> {
    let mut atoms: Vec<(&StationarySet, f64)> = props.iter().flat_map(|p| p.atoms()).collect();
    atoms.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut steps: Vec<ScheduleStep> = Vec::new();
    let mut groups: Vec<Vec<&StationarySet>> = Vec::new();
    for (set, t) in atoms {
        match steps.last() {
            Some(s) if tol.same_time(s.time, t) => {
                if !s.basis.same_assignment(set.basis()) {
                    return Err(Error::InvalidSchedule(format!(
                        "mixed bases '{}' and '{}' registered at time {t}",
                        s.basis.name(),
                        set.basis().name()
                    )));
                }
                groups.last_mut().expect("group per step").push(set);
            }
            _ => {
                steps.push(ScheduleStep {
                    time: t,
                    basis: set.basis().clone(),
                });
                groups.push(vec![set]);
            }
        }
    }
    let cells = steps
        .iter()
        .zip(&groups)
        .map(|(step, sets)| {
            let mut by_signature: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
            for i in 0..step.basis.dim() {
                let sig = sets.iter().map(|s| s.contains(i)).collect();
                by_signature.entry(sig).or_default().push(i);
            }
            let mut cells: Vec<Vec<usize>> = by_signature.into_values().collect();
            cells.sort();
            cells
                .into_iter()
                .map(|m| StationarySet::new(&step.basis, m))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((steps, cells))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub seed: u64,
}

/// Monte-Carlo estimate of `Pr(p)` from coarse histories.
pub fn estimate(
    p: &Proposition,
    rho: &DensityOperator,
    prop: &Propagator,
    n_trials: u64,
    seed: u64,
) -> Result<Estimate> {
    estimate_with(p, rho, prop, n_trials, seed, SamplerOptions::default())
}

pub fn estimate_with(
    p: &Proposition,
    rho: &DensityOperator,
    prop: &Propagator,
    n_trials: u64,
    seed: u64,
    mut options: SamplerOptions,
) -> Result<Estimate> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    p.validate()?;
    let (steps, cells) = coarse_schedule(&[p], &options.tol)?;
    options.coins = p.coins()?;
    let tol = options.tol;
    let sampler = HistorySampler::with_options(steps, Granularity::Coarse(cells), rho, prop, options)?;
    let hits: u64 = (0..n_trials)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let rec = sampler.sample(seed, i)?;
            Ok(u64::from(truth_value(&rec, p, &tol)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let n = n_trials as f64;
    let mean = hits as f64 / n;
    Ok(Estimate {
        mean,
        stderr: (mean * (1.0 - mean) / n).sqrt(),
        n_trials,
        seed,
    })
}

/// Streams records as `trial,time,occupied_label,prop_id,bit`. History rows
/// leave the proposition columns empty; bit rows leave the history columns
/// empty. Classical events appear as bits with id `certain:<tag>`.
pub fn write_trials_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["trial", "time", "occupied_label", "prop_id", "bit"])
        .map_err(io)?;
    for r in records {
        let trial = r.trial_index.to_string();
        for e in &r.history {
            w.write_record([trial.as_str(), &e.time.to_string(), e.label(), "", ""])
                .map_err(io)?;
        }
        for (tag, v) in &r.coins {
            let id = format!("certain:{tag}");
            w.write_record([trial.as_str(), "", "", &id, if *v { "1" } else { "0" }])
                .map_err(io)?;
        }
        for (id, v) in &r.bits {
            w.write_record([trial.as_str(), "", "", id, if *v { "1" } else { "0" }])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{HilbertSpace, ONE, ZERO};

    #[test]
    fn draw_skips_zero_weights() {
        let cdf = cumulative(&[0.0, 0.5, 0.0, 0.5]);
        let mut rng = substream(1, 2, 3);
        for _ in 0..1000 {
            let i = draw(&cdf, &mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn rabi_fine_histories() {
        let s = Arc::new(HilbertSpace::new(["g", "e"]).unwrap());
        let b = Basis::computational(&s);
        let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let prop = Propagator::new(&s, h).unwrap();
        let rho = DensityOperator::basis_state(&s, 0).unwrap();
        let steps = vec![
            ScheduleStep { time: 0.0, basis: b.clone() },
            ScheduleStep { time: 0.6, basis: b.clone() },
        ];
        let sampler = HistorySampler::new(steps, Granularity::Fine, &rho, &prop).unwrap();
        let recs = sampler.sample_many(5, 20_000).unwrap();
        let excited = recs.iter().filter(|r| r.history[1].state == 1).count() as f64 / 2e4;
        let exact = 0.6_f64.sin().powi(2);
        assert!((excited - exact).abs() < 5.0 * (exact * (1.0 - exact) / 2e4).sqrt());
        assert!(recs.iter().all(|r| r.history[0].state == 0));
    }

    #[test]
    fn partition_must_cover() {
        let s = Arc::new(HilbertSpace::with_dim(3).unwrap());
        let b = Basis::computational(&s);
        let prop = Propagator::free(&s);
        let rho = DensityOperator::maximally_mixed(&s);
        let steps = vec![ScheduleStep { time: 0.0, basis: b.clone() }];
        let cells = vec![vec![StationarySet::new(&b, [0, 1]).unwrap()]];
        assert!(matches!(
            HistorySampler::new(steps, Granularity::Coarse(cells), &rho, &prop),
            Err(Error::InvalidSchedule(_))
        ));
    }
}
