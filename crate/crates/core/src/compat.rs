//! Compatibility of families of projectors under a state.
//!
//! A family is compatible when every ordering of every finite sequence of its
//! members yields the same probability `tr[(P_s)^dag P_s rho]`, where `P_s`
//! is the ordered product. Sequences of length two reduce to
//! `tr[P2 P1 P2 rho] - tr[P1 P2 P1 rho]`; longer sequences are checked by
//! brute force up to a configurable length.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    commutator_norm, sandwich_trace, trace_product, CMatrix, DensityOperator, Projector,
    Propagator, StationarySet,
};
use crate::propositions::{compile_chain, ChainOperator, CompoundNormalForm, Entry};
use crate::tol::Tolerances;

pub const DEFAULT_MAX_SEQUENCE_LEN: usize = 3;
/// Beyond this many orderings a deterministic stride sample is checked.
pub const MAX_ORDERINGS: usize = 10_000;
pub const MAX_FINE_HISTORIES: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CompatKind {
    /// All pairs commute.
    Commuting,
    /// Every constituent probability is 0 or 1.
    Deterministic,
    /// Non-commuting and non-deterministic, yet every checked ordering agrees.
    OrderingConsistent,
    Incompatible,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatVerdict {
    pub kind: CompatKind,
    /// Largest spread of probabilities across orderings of one sequence.
    pub residual: f64,
    /// Largest commutator max-norm over pairs.
    pub commutator: f64,
    pub witness: String,
    /// True when only a stride sample of orderings was checked.
    pub sampled: bool,
    pub orderings_checked: usize,
}

impl CompatVerdict {
    pub fn is_compatible(&self) -> bool {
        self.kind != CompatKind::Incompatible
    }

    fn trivial(witness: &str) -> Self {
        Self {
            kind: CompatKind::Commuting,
            residual: 0.0,
            commutator: 0.0,
            witness: witness.into(),
            sampled: false,
            orderings_checked: 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CompatChecker {
    pub tol: Tolerances,
    pub max_len: usize,
}

impl Default for CompatChecker {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            max_len: DEFAULT_MAX_SEQUENCE_LEN,
        }
    }
}

impl CompatChecker {
    pub fn classify_pair(
        &self,
        p1: &Projector,
        p2: &Projector,
        rho: &DensityOperator,
    ) -> Result<CompatVerdict> {
        self.check_family(
            &[p1.matrix().clone(), p2.matrix().clone()],
            std::slice::from_ref(rho.matrix()),
        )
    }

    /// Checks the family against each of the given states.
    pub fn check_family(&self, projectors: &[CMatrix], states: &[CMatrix]) -> Result<CompatVerdict> {
        if self.max_len < 2 {
            return Err(Error::InvalidArgument(
                "maximum sequence length must be at least 2".into(),
            ));
        }
        let k = projectors.len();
        if k < 2 {
            return Ok(CompatVerdict::trivial("fewer than two constituents"));
        }
        let d = projectors[0].nrows();
        if let Some(m) = projectors.iter().chain(states).find(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }

        let mut commutator = 0.0_f64;
        for i in 0..k {
            for j in i + 1..k {
                commutator = commutator.max(commutator_norm(&projectors[i], &projectors[j]));
            }
        }
        let deterministic = states.iter().all(|s| {
            projectors
                .iter()
                .all(|p| self.tol.is_deterministic(trace_product(p, s).re))
        });

        let total: u128 = (2..=self.max_len as u32)
            .map(|l| (k as u128).pow(l) - k as u128)
            .sum();
        let stride = total.div_ceil(MAX_ORDERINGS as u128).max(1) as usize;
        let sampled = stride > 1;

        let mut residual = 0.0_f64;
        let mut witness = String::new();
        let mut checked = 0usize;
        let mut group = 0usize;
        for len in 2..=self.max_len {
            let mut multiset = vec![0usize; len];
            loop {
                if multiset[0] != multiset[len - 1] {
                    if group % stride == 0 {
                        let (spread, w, n) = self.spread(projectors, states, &multiset);
                        checked += n;
                        if spread > residual || witness.is_empty() {
                            residual = residual.max(spread);
                            witness = w;
                        }
                    }
                    group += 1;
                }
                if !next_multiset(&mut multiset, k) {
                    break;
                }
            }
        }

        let kind = if residual > self.tol.compat {
            CompatKind::Incompatible
        } else if commutator <= self.tol.algebra {
            CompatKind::Commuting
        } else if deterministic {
            CompatKind::Deterministic
        } else {
            CompatKind::OrderingConsistent
        };
        if kind == CompatKind::Commuting {
            witness = format!("commutator max-norm {commutator:e}");
        }
        Ok(CompatVerdict {
            kind,
            residual,
            commutator,
            witness,
            sampled,
            orderings_checked: checked,
        })
    }

    /// Largest probability spread over the distinct orderings of one multiset.
    fn spread(
        &self,
        projectors: &[CMatrix],
        states: &[CMatrix],
        multiset: &[usize],
    ) -> (f64, String, usize) {
        let mut seq = multiset.to_vec();
        let mut lo = vec![(f64::INFINITY, Vec::new()); states.len()];
        let mut hi = vec![(f64::NEG_INFINITY, Vec::new()); states.len()];
        let mut n = 0;
        loop {
            // seq[0] acts first.
            let mut m = projectors[seq[0]].clone();
            for &i in &seq[1..] {
                m = &projectors[i] * m;
            }
            for (s, state) in states.iter().enumerate() {
                let q = sandwich_trace(&m, state);
                if q < lo[s].0 {
                    lo[s] = (q, seq.clone());
                }
                if q > hi[s].0 {
                    hi[s] = (q, seq.clone());
                }
            }
            n += 1;
            if !next_permutation(&mut seq) {
                break;
            }
        }
        let (s, spread) = (0..states.len())
            .map(|s| (s, hi[s].0 - lo[s].0))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let witness = format!(
            "orderings {:?} and {:?} differ by {spread:e} (state {s})",
            hi[s].1, lo[s].1
        );
        (spread, witness, n)
    }

    /// Family check on stationary sets; a family from one basis commutes.
    pub fn check_sets(&self, sets: &[StationarySet], states: &[CMatrix]) -> Result<CompatVerdict> {
        if let Some(first) = sets.first() {
            if sets.iter().all(|s| s.basis().same_assignment(first.basis())) {
                return Ok(CompatVerdict::trivial("single stationary basis"));
            }
        }
        let projectors: Vec<CMatrix> = sets.iter().map(StationarySet::projector_matrix).collect();
        self.check_family(&projectors, states)
    }

    /// Checks the sets of a compound with the state evolved to each of its
    /// entry times.
    pub fn check_compound(
        &self,
        nf: &CompoundNormalForm,
        rho: &DensityOperator,
        prop: &Propagator,
    ) -> Result<CompatVerdict> {
        let sets: Vec<StationarySet> = nf.entries().iter().map(|e| e.set.clone()).collect();
        if sets.len() < 2 {
            return Ok(CompatVerdict::trivial("fewer than two constituents"));
        }
        let states: Vec<CMatrix> = nf
            .times()
            .into_iter()
            .map(|t| prop.evolve(rho, t).matrix().clone())
            .collect();
        self.check_sets(&sets, &states)
    }
}

fn next_multiset(m: &mut [usize], k: usize) -> bool {
    // Non-decreasing sequences over 0..k in lexicographic order.
    let Some(i) = (0..m.len()).rev().find(|&i| m[i] + 1 < k) else {
        return false;
    };
    let v = m[i] + 1;
    for x in &mut m[i..] {
        *x = v;
    }
    true
}

fn next_permutation(s: &mut [usize]) -> bool {
    let Some(i) = (1..s.len()).rev().find(|&i| s[i - 1] < s[i]) else {
        return false;
    };
    let j = (i..s.len()).rev().find(|&j| s[j] > s[i - 1]).expect("pivot exists");
    s.swap(i - 1, j);
    s[i..].reverse();
    true
}

pub fn classify_pair(p1: &Projector, p2: &Projector, rho: &DensityOperator) -> Result<CompatVerdict> {
    CompatChecker::default().classify_pair(p1, p2, rho)
}

pub fn check_compound(
    nf: &CompoundNormalForm,
    rho: &DensityOperator,
    prop: &Propagator,
    max_len: usize,
) -> Result<CompatVerdict> {
    CompatChecker {
        tol: Tolerances::default(),
        max_len,
    }
    .check_compound(nf, rho, prop)
}

pub fn check_family(
    projectors: &[CMatrix],
    rho_t: &CMatrix,
    max_len: usize,
) -> Result<CompatVerdict> {
    CompatChecker {
        tol: Tolerances::default(),
        max_len,
    }
    .check_family(projectors, std::slice::from_ref(rho_t))
}

/// `tr[P2 P1 P2 rho] - tr[P1 P2 P1 rho]`.
pub fn ordering_residual(p1: &CMatrix, p2: &CMatrix, rho: &CMatrix) -> f64 {
    sandwich_trace(&(p1 * p2), rho) - sandwich_trace(&(p2 * p1), rho)
}

/// `sum_{i in C1, j in C2} |<phi_i|psi_j>|^2 (<phi_i|rho|phi_i> - <psi_j|rho|psi_j>)`.
/// For rank-one sets this is minus the ordering residual.
pub fn detailed_balance_residual(
    c1: &StationarySet,
    c2: &StationarySet,
    rho: &DensityOperator,
) -> f64 {
    let a = c1.isometry();
    let b = c2.isometry();
    let overlap = a.adjoint() * &b;
    let ra = (a.adjoint() * rho.matrix() * &a).diagonal();
    let rb = (b.adjoint() * rho.matrix() * &b).diagonal();
    let mut acc = 0.0;
    for i in 0..a.ncols() {
        for j in 0..b.ncols() {
            acc += overlap[(i, j)].norm_sqr() * (ra[i].re - rb[j].re);
        }
    }
    acc
}

/// Probability of the compound summed over its fine-grained histories,
/// computed by propagating weights entry to entry.
pub fn fine_history_probability(
    nf: &CompoundNormalForm,
    rho: &DensityOperator,
    prop: &Propagator,
) -> Result<f64> {
    let entries = nf.entries();
    let Some(first) = entries.first() else {
        return Ok(1.0);
    };
    let v = first.set.isometry();
    let rho_t = prop.evolve(rho, first.time);
    let mut w: Vec<f64> = (v.adjoint() * rho_t.matrix() * &v)
        .diagonal()
        .iter()
        .map(|z| z.re)
        .collect();
    let mut prev_iso = v;
    let mut prev_t = first.time;
    for e in &entries[1..] {
        let iso = e.set.isometry();
        let a = iso.adjoint() * &*prop.at(e.time - prev_t) * &prev_iso;
        w = (0..a.nrows())
            .map(|j| (0..a.ncols()).map(|i| a[(j, i)].norm_sqr() * w[i]).sum())
            .collect();
        prev_iso = iso;
        prev_t = e.time;
    }
    Ok(w.iter().sum())
}

/// `|Pr_coarse - sum_h Pr_h|` over the fine-grained histories of the compound.
pub fn history_residual(
    nf: &CompoundNormalForm,
    rho: &DensityOperator,
    prop: &Propagator,
) -> Result<f64> {
    let coarse = compile_chain(nf, prop)?.probability(rho);
    Ok((coarse - fine_history_probability(nf, rho, prop)?).abs())
}

/// Chain operators of every fine-grained history of the compound.
pub fn fine_history_chains(
    nf: &CompoundNormalForm,
    prop: &Propagator,
) -> Result<Vec<ChainOperator>> {
    let entries = nf.entries();
    let size: u128 = entries.iter().map(|e| e.set.len() as u128).product();
    if size > MAX_FINE_HISTORIES {
        return Err(Error::EnumerationTooLarge {
            size,
            limit: MAX_FINE_HISTORIES,
        });
    }
    let members: Vec<Vec<usize>> = entries
        .iter()
        .map(|e| e.set.members().iter().copied().collect())
        .collect();
    let mut idx = vec![0usize; entries.len()];
    let mut out = Vec::with_capacity(size as usize);
    if size == 0 {
        return Ok(out);
    }
    loop {
        let fine = entries
            .iter()
            .zip(&idx)
            .zip(&members)
            .map(|((e, &i), m)| {
                Ok(Entry {
                    time: e.time,
                    set: StationarySet::singleton(e.set.basis(), m[i])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let fine = CompoundNormalForm::new(fine, &Tolerances::default())?
            .expect("singleton histories are non-empty");
        out.push(compile_chain(&fine, prop)?);
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < members[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{c, Basis, HilbertSpace, ONE, ZERO};
    use std::sync::Arc;

    fn qubit_bases() -> (Arc<HilbertSpace>, Arc<Basis>, Arc<Basis>) {
        let s = Arc::new(HilbertSpace::new(["0", "1"]).unwrap());
        let z = Basis::computational(&s);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = Basis::from_vectors(
            "x",
            &s,
            vec!["+".into(), "-".into()],
            CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
        )
        .unwrap();
        (s, z, x)
    }

    #[test]
    fn sigma_z_sigma_x_incompatible_on_up() {
        let (s, z, x) = qubit_bases();
        let pz = StationarySet::singleton(&z, 0).unwrap().projector();
        let px = StationarySet::singleton(&x, 0).unwrap().projector();
        let rho = DensityOperator::basis_state(&s, 0).unwrap();
        let v = classify_pair(&pz, &px, &rho).unwrap();
        assert_eq!(v.kind, CompatKind::Incompatible);
        assert!(v.residual > 0.1);
        let w = classify_pair(&px, &pz, &rho).unwrap();
        assert_eq!(v.residual, w.residual);
    }

    #[test]
    fn commuting_pair() {
        let (s, z, _) = qubit_bases();
        let p0 = StationarySet::singleton(&z, 0).unwrap().projector();
        let p1 = StationarySet::singleton(&z, 1).unwrap().projector();
        let v = classify_pair(&p0, &p1, &DensityOperator::maximally_mixed(&s)).unwrap();
        assert_eq!(v.kind, CompatKind::Commuting);
        assert!(v.residual <= 1e-10);
    }

    #[test]
    fn permutations_and_multisets() {
        let mut s = vec![0, 0, 1];
        let mut n = 1;
        while next_permutation(&mut s) {
            n += 1;
        }
        assert_eq!(n, 3);
        let mut m = vec![0, 0];
        let mut count = 1;
        while next_multiset(&mut m, 3) {
            count += 1;
        }
        assert_eq!(count, 6);
    }

    #[test]
    fn rank_one_detailed_balance_matches_ordering_residual() {
        let (s, z, x) = qubit_bases();
        let rho = DensityOperator::new(
            &s,
            CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]),
        )
        .unwrap();
        let a = StationarySet::singleton(&z, 0).unwrap();
        let b = StationarySet::singleton(&x, 1).unwrap();
        let db = detailed_balance_residual(&a, &b, &rho);
        let r = ordering_residual(&a.projector_matrix(), &b.projector_matrix(), rho.matrix());
        assert!((db + r).abs() < 1e-14);
    }

    #[test]
    fn fine_history_dp_matches_enumeration() {
        let s = Arc::new(HilbertSpace::with_dim(3).unwrap());
        let b = Basis::computational(&s);
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[ONE, c(0.3, 0.1), ZERO, c(0.3, -0.1), ZERO, c(0.5, 0.0), ZERO, c(0.5, 0.0), c(-1.0, 0.0)],
        );
        let prop = Propagator::new(&s, h).unwrap();
        let rho = DensityOperator::maximally_mixed(&s);
        let nf = CompoundNormalForm::new(
            vec![
                Entry { time: 0.2, set: StationarySet::new(&b, [0, 1]).unwrap() },
                Entry { time: 0.9, set: StationarySet::new(&b, [1, 2]).unwrap() },
                Entry { time: 1.7, set: StationarySet::new(&b, [0, 2]).unwrap() },
            ],
            &Tolerances::default(),
        )
        .unwrap()
        .unwrap();
        let sum: f64 = fine_history_chains(&nf, &prop)
            .unwrap()
            .iter()
            .map(|k| k.probability(&rho))
            .sum();
        let dp = fine_history_probability(&nf, &rho, &prop).unwrap();
        assert!((sum - dp).abs() < 1e-13);
    }
}
