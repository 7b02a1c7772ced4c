//! Per-trial bookkeeping shared by the scenarios.

use chaintrial_core::hilbert::{DensityOperator, Propagator};
use chaintrial_core::propositions::{Evaluator, Proposition};
use chaintrial_core::sampler::{evaluate_bits, Granularity, HistorySampler, SamplerOptions, ScheduleStep, TrialRecord};
use chaintrial_core::Tolerances;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

/// Samples `n` trials and records the bit of every named proposition.
#[allow(clippy::too_many_arguments)]
pub fn sample_with_bits(
    steps: Vec<ScheduleStep>,
    granularity: Granularity,
    rho: &DensityOperator,
    prop: &Propagator,
    props: &[(String, Proposition)],
    n: u64,
    seed: u64,
    options: SamplerOptions,
) -> Result<Vec<TrialRecord>> {
    let tol = options.tol;
    let sampler = HistorySampler::with_options(steps, granularity, rho, prop, options)?;
    let mut records = sampler.sample_many(seed, n)?;
    records
        .par_iter_mut()
        .try_for_each(|r| evaluate_bits(r, props, &tol))?;
    Ok(records)
}

/// Count of trials breaking one-state-per-time: a repeated or unordered
/// time, or an occupied state outside the step basis.
pub fn exclusivity_violations(records: &[TrialRecord]) -> usize {
    records
        .iter()
        .filter(|r| {
            let ordered = r.history.windows(2).all(|w| w[0].time < w[1].time);
            let single = r.history.iter().all(|e| e.state < e.basis.dim());
            !(ordered && single)
        })
        .count()
}

/// A claimed relation `bit(P) = bit(Q)`. It holds only when the exact
/// probabilities satisfy `Pr(P and Q) = Pr(P) = Pr(Q)` and no sampled trial
/// disagrees.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub p: String,
    pub q: String,
    pub pr_p: f64,
    pub pr_q: f64,
    pub pr_joint: f64,
    pub statistical: bool,
    pub trials: u64,
    pub disagreements: u64,
    pub holds: bool,
}

pub fn relation_report(
    rho: &DensityOperator,
    prop: &Propagator,
    p: (&str, &Proposition),
    q: (&str, &Proposition),
    records: &[TrialRecord],
    tol: &Tolerances,
) -> Result<RelationReport> {
    let ev = Evaluator::new(rho, prop).tolerances(*tol);
    let pr_p = ev.probability(p.1)?;
    let pr_q = ev.probability(q.1)?;
    let pr_joint = ev.probability(&p.1.clone().and(q.1.clone()))?;
    let statistical = (pr_joint - pr_p).abs() <= tol.det && (pr_joint - pr_q).abs() <= tol.det;
    let disagreements = records
        .iter()
        .filter(|r| r.bits.get(p.0) != r.bits.get(q.0) || !r.bits.contains_key(p.0))
        .count() as u64;
    Ok(RelationReport {
        p: p.0.to_string(),
        q: q.0.to_string(),
        pr_p,
        pr_q,
        pr_joint,
        statistical,
        trials: records.len() as u64,
        disagreements,
        holds: statistical && disagreements == 0 && !records.is_empty(),
    })
}
