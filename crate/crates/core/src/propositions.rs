//! Occupation propositions, their disjunctive normal form, and chain
//! operators.
//!
//! Chain operators are kept in Heisenberg form,
//! `K = P_N(t_N) ... P_1(t_1)` with `P(t) = U(t)^dag P U(t)`, so that
//! `Pr = tr[K rho K^dag]` with `rho` the state at time zero.

pub mod json;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{BitAnd, BitOr, Not};
use std::sync::Arc;

use crate::compat::CompatChecker;
use crate::error::{Error, Result};
use crate::hilbert::{
    c, commutator_norm, lueders_update, sandwich_trace, CMatrix, DensityOperator, HilbertSpace,
    Propagator, StationarySet,
};
use crate::tol::Tolerances;

/// Maximum number of disjuncts kept while normalizing.
pub const MAX_TERMS: usize = 64;
/// Maximum number of disjuncts combined by inclusion–exclusion.
pub const MAX_INCLUSION_EXCLUSION_TERMS: usize = 16;

#[derive(Clone, Debug)]
pub enum Proposition {
    /// The system occupies a state of `set` at `time`.
    Atom { set: StationarySet, time: f64 },
    Not(Box<Proposition>),
    And(Vec<Proposition>),
    Or(Vec<Proposition>),
    /// Classical event of probability `p`; equal tags are the same event.
    Certain { p: f64, tag: String },
}

impl Proposition {
    pub fn atom(set: StationarySet, time: f64) -> Self {
        Proposition::Atom { set, time }
    }

    pub fn certain(p: f64, tag: impl Into<String>) -> Self {
        Proposition::Certain { p, tag: tag.into() }
    }

    pub fn and(self, other: Proposition) -> Self {
        Proposition::And(vec![self, other])
    }

    pub fn or(self, other: Proposition) -> Self {
        Proposition::Or(vec![self, other])
    }

    pub fn all(props: impl IntoIterator<Item = Proposition>) -> Self {
        Proposition::And(props.into_iter().collect())
    }

    pub fn any(props: impl IntoIterator<Item = Proposition>) -> Self {
        Proposition::Or(props.into_iter().collect())
    }

    pub fn atoms(&self) -> Vec<(&StationarySet, f64)> {
        let mut out = Vec::new();
        self.visit(&mut |p| {
            if let Proposition::Atom { set, time } = p {
                out.push((set, *time));
            }
        });
        out
    }

    /// Distinct atom times, ascending.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.atoms().into_iter().map(|(_, t)| t).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    /// Tags and probabilities of every classical event.
    pub fn coins(&self) -> Result<BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        let mut err = None;
        self.visit(&mut |p| {
            if let Proposition::Certain { p, tag } = p {
                match out.get(tag) {
                    Some(&q) if q != *p => {
                        err = Some(Error::InvalidProposition(format!(
                            "tag '{tag}' used with probabilities {q} and {p}"
                        )))
                    }
                    _ => {
                        out.insert(tag.clone(), *p);
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn space(&self) -> Option<Arc<HilbertSpace>> {
        self.atoms().first().map(|(s, _)| s.basis().space().clone())
    }

    pub fn validate(&self) -> Result<()> {
        let mut err = None;
        let mut dim = None;
        self.visit(&mut |p| match p {
            Proposition::Atom { set, time } => {
                if !time.is_finite() {
                    err.get_or_insert(Error::InvalidProposition(format!("time {time}")));
                }
                let d = set.basis().dim();
                if *dim.get_or_insert(d) != d {
                    err.get_or_insert(Error::InvalidProposition(
                        "atoms over different spaces".into(),
                    ));
                }
            }
            Proposition::Certain { p, tag } => {
                if !(0.0..=1.0).contains(p) {
                    err.get_or_insert(Error::InvalidProposition(format!(
                        "probability {p} of '{tag}' outside [0, 1]"
                    )));
                }
            }
            _ => {}
        });
        if let Some(e) = err {
            return Err(e);
        }
        self.coins().map(|_| ())
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Proposition)) {
        f(self);
        match self {
            Proposition::Not(q) => q.visit(f),
            Proposition::And(qs) | Proposition::Or(qs) => qs.iter().for_each(|q| q.visit(f)),
            _ => {}
        }
    }

    /// Stable 64-bit hash of the textual form.
    pub fn fingerprint(&self) -> u64 {
        self.to_string().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        })
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, qs: &[Proposition], op: &str| {
            write!(f, "(")?;
            for (i, q) in qs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{q}")?;
            }
            write!(f, ")")
        };
        match self {
            Proposition::Atom { set, time } => write!(f, "{set}@{time}"),
            Proposition::Not(q) => write!(f, "¬{q}"),
            Proposition::And(qs) => join(f, qs, "∧"),
            Proposition::Or(qs) => join(f, qs, "∨"),
            Proposition::Certain { p, tag } => write!(f, "certain[{tag}:{p}]"),
        }
    }
}

impl Not for Proposition {
    type Output = Proposition;
    fn not(self) -> Proposition {
        Proposition::Not(Box::new(self))
    }
}

impl BitAnd for Proposition {
    type Output = Proposition;
    fn bitand(self, rhs: Proposition) -> Proposition {
        self.and(rhs)
    }
}

impl BitOr for Proposition {
    type Output = Proposition;
    fn bitor(self, rhs: Proposition) -> Proposition {
        self.or(rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub time: f64,
    pub set: StationarySet,
}

/// Time-ordered conjunction of single-time constraints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompoundNormalForm {
    entries: Vec<Entry>,
}

impl CompoundNormalForm {
    pub fn single(set: StationarySet, time: f64) -> Self {
        Self {
            entries: vec![Entry { time, set }],
        }
    }

    /// Conjunction of the entries; `None` when it is identically false.
    pub fn new(entries: Vec<Entry>, tol: &Tolerances) -> Result<Option<Self>> {
        let mut out = Self::default();
        for e in entries {
            if !out.insert(e, tol)? {
                return Ok(None);
            }
        }
        Ok(Some(out))
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.entries.iter().map(|e| e.time).collect();
        t.dedup();
        t
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|e| e.set.basis().dim())
    }

    /// Returns false when the conjunction became empty.
    fn insert(&mut self, e: Entry, tol: &Tolerances) -> Result<bool> {
        if e.set.is_empty() {
            return Ok(false);
        }
        let mut merge_into = None;
        for (i, x) in self.entries.iter().enumerate() {
            if !tol.same_time(x.time, e.time) {
                continue;
            }
            if x.set.basis().same_assignment(e.set.basis()) {
                merge_into.get_or_insert(i);
            } else if x.time == e.time {
                return Err(Error::IncompatibleBases(format!(
                    "atoms at time {} over bases '{}' and '{}'",
                    e.time,
                    x.set.basis().name(),
                    e.set.basis().name()
                )));
            } else if commutator_norm(&x.set.projector_matrix(), &e.set.projector_matrix())
                > tol.algebra
            {
                return Err(Error::IncompatibleBases(format!(
                    "non-commuting atoms at times {} and {} closer than the time tolerance",
                    x.time, e.time
                )));
            }
        }
        if let Some(i) = merge_into {
            let merged = self.entries[i].set.intersect(&e.set)?;
            if merged.is_empty() {
                return Ok(false);
            }
            self.entries[i].set = merged;
        } else {
            let pos = self.entries.partition_point(|x| x.time <= e.time);
            self.entries.insert(pos, e);
        }
        Ok(true)
    }

    pub fn conjoin(&self, other: &Self, tol: &Tolerances) -> Result<Option<Self>> {
        let mut out = self.clone();
        for e in &other.entries {
            if !out.insert(e.clone(), tol)? {
                return Ok(None);
            }
        }
        Ok(Some(out))
    }

    /// Every history satisfying `self` satisfies `other`.
    pub fn implies(&self, other: &Self, tol: &Tolerances) -> bool {
        other.entries.iter().all(|eb| {
            eb.set.is_full()
                || self
                    .entries
                    .iter()
                    .any(|ea| tol.same_time(ea.time, eb.time) && ea.set.is_subset(&eb.set))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coin {
    pub p: f64,
    pub value: bool,
}

impl Coin {
    pub fn weight(&self) -> f64 {
        if self.value {
            self.p
        } else {
            1.0 - self.p
        }
    }
}

/// One disjunct: classical coin outcomes and a quantum compound.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Conjunct {
    pub coins: BTreeMap<String, Coin>,
    pub compound: CompoundNormalForm,
}

impl Conjunct {
    pub fn weight(&self) -> f64 {
        self.coins.values().map(Coin::weight).product()
    }

    pub fn conjoin(&self, other: &Self, tol: &Tolerances) -> Result<Option<Self>> {
        let mut coins = self.coins.clone();
        for (tag, coin) in &other.coins {
            match coins.get(tag) {
                Some(x) if x.p != coin.p => {
                    return Err(Error::InvalidProposition(format!(
                        "tag '{tag}' used with probabilities {} and {}",
                        x.p, coin.p
                    )))
                }
                Some(x) if x.value != coin.value => return Ok(None),
                Some(_) => {}
                None => {
                    coins.insert(tag.clone(), coin.clone());
                }
            }
        }
        Ok(self
            .compound
            .conjoin(&other.compound, tol)?
            .map(|compound| Conjunct { coins, compound }))
    }

    pub fn implies(&self, other: &Self, tol: &Tolerances) -> bool {
        other
            .coins
            .iter()
            .all(|(tag, c)| self.coins.get(tag) == Some(c))
            && self.compound.implies(&other.compound, tol)
    }

    /// Same coins and entry times, differing in exactly one entry's set.
    fn merge_with(&self, other: &Self) -> Option<Self> {
        if self.coins != other.coins
            || self.compound.entries.len() != other.compound.entries.len()
        {
            return None;
        }
        let mut diff = None;
        for (i, (a, b)) in self
            .compound
            .entries
            .iter()
            .zip(&other.compound.entries)
            .enumerate()
        {
            if a.time != b.time || !a.set.basis().same_assignment(b.set.basis()) {
                return None;
            }
            if a.set != b.set {
                if diff.is_some() {
                    return None;
                }
                diff = Some(i);
            }
        }
        let i = diff?;
        let mut merged = self.clone();
        merged.compound.entries[i].set = self.compound.entries[i]
            .set
            .union(&other.compound.entries[i].set)
            .ok()?;
        Some(merged)
    }
}

/// Disjunction of conjuncts; no terms means false.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalForm {
    pub terms: Vec<Conjunct>,
}

impl NormalForm {
    pub fn is_false(&self) -> bool {
        self.terms.is_empty()
    }

    /// The compound when the form is a single coin-free term.
    pub fn as_compound(&self) -> Option<&CompoundNormalForm> {
        match self.terms.as_slice() {
            [t] if t.coins.is_empty() => Some(&t.compound),
            _ => None,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|c| c.compound.entries.iter().map(|e| e.time))
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

pub fn normalize(p: &Proposition) -> Result<NormalForm> {
    normalize_with(p, &Tolerances::default())
}

pub fn normalize_with(p: &Proposition, tol: &Tolerances) -> Result<NormalForm> {
    p.validate()?;
    Ok(NormalForm {
        terms: dnf(p, false, tol)?,
    })
}

fn dnf(p: &Proposition, neg: bool, tol: &Tolerances) -> Result<Vec<Conjunct>> {
    match (p, neg) {
        (Proposition::Atom { set, time }, _) => {
            let set = if neg { set.complement() } else { set.clone() };
            if set.is_empty() {
                return Ok(vec![]);
            }
            Ok(vec![Conjunct {
                coins: BTreeMap::new(),
                compound: CompoundNormalForm::single(set, *time),
            }])
        }
        (Proposition::Certain { p, tag }, _) => {
            let coin = Coin {
                p: *p,
                value: !neg,
            };
            if coin.weight() == 0.0 {
                return Ok(vec![]);
            }
            Ok(vec![Conjunct {
                coins: BTreeMap::from([(tag.clone(), coin)]),
                compound: CompoundNormalForm::default(),
            }])
        }
        (Proposition::Not(q), _) => dnf(q, !neg, tol),
        (Proposition::And(qs), false) | (Proposition::Or(qs), true) => {
            let mut acc = vec![Conjunct::default()];
            for q in qs {
                let d = dnf(q, neg, tol)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &d {
                        if let Some(x) = a.conjoin(b, tol)? {
                            next.push(x);
                        }
                    }
                }
                acc = simplify(next, tol)?;
                if acc.is_empty() {
                    break;
                }
            }
            Ok(acc)
        }
        (Proposition::Or(qs), false) | (Proposition::And(qs), true) => {
            let mut acc = Vec::new();
            for q in qs {
                acc.extend(dnf(q, neg, tol)?);
                acc = simplify(acc, tol)?;
            }
            Ok(acc)
        }
    }
}

fn simplify(mut terms: Vec<Conjunct>, tol: &Tolerances) -> Result<Vec<Conjunct>> {
    loop {
        let mut changed = false;
        // Absorption: a term implying another is redundant.
        let mut i = 0;
        while i < terms.len() {
            let redundant = (0..terms.len()).any(|j| {
                j != i
                    && terms[i].implies(&terms[j], tol)
                    && (j < i || !terms[j].implies(&terms[i], tol))
            });
            if redundant {
                terms.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        'merge: for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if let Some(m) = terms[i].merge_with(&terms[j]) {
                    terms[i] = m;
                    terms.remove(j);
                    changed = true;
                    break 'merge;
                }
            }
        }
        if !changed {
            break;
        }
    }
    if terms.len() > MAX_TERMS {
        return Err(Error::TooComplex(format!(
            "{} disjuncts exceed the limit of {MAX_TERMS}",
            terms.len()
        )));
    }
    Ok(terms)
}

#[derive(Clone, Debug)]
pub struct ChainOperator {
    matrix: CMatrix,
}

impl ChainOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `tr[K rho K^dag]`.
    pub fn probability(&self, rho: &DensityOperator) -> f64 {
        sandwich_trace(&self.matrix, rho.matrix())
    }
}

fn check_prop_dim(nf: &CompoundNormalForm, prop: &Propagator) -> Result<()> {
    match nf.dim() {
        Some(d) if d != prop.dim() => Err(Error::DimensionMismatch {
            expected: prop.dim(),
            found: d,
        }),
        _ => Ok(()),
    }
}

/// `U(t)^dag P_set U(t)`.
pub fn heisenberg_projector(set: &StationarySet, t: f64, prop: &Propagator) -> CMatrix {
    if prop.is_trivial() || t == 0.0 {
        return set.projector_matrix();
    }
    let v = prop.at(t).adjoint() * set.isometry();
    &v * v.adjoint()
}

pub fn compile_chain(nf: &CompoundNormalForm, prop: &Propagator) -> Result<ChainOperator> {
    check_prop_dim(nf, prop)?;
    let d = prop.dim();
    let mut k: Option<CMatrix> = None;
    for e in nf.entries() {
        let f = heisenberg_projector(&e.set, e.time, prop);
        k = Some(match k {
            None => f,
            Some(k) => f * k,
        });
    }
    Ok(ChainOperator {
        matrix: k.unwrap_or_else(|| CMatrix::identity(d, d)),
    })
}

/// Chain operator of a conjunct, scaled by the square root of its coin weight.
pub fn compile_conjunct(term: &Conjunct, prop: &Propagator) -> Result<ChainOperator> {
    let mut k = compile_chain(&term.compound, prop)?;
    let w = term.weight();
    if w != 1.0 {
        k.matrix *= c(w.sqrt(), 0.0);
    }
    Ok(k)
}

/// Schrödinger form `U(t_N) P_N U(t_N - t_{N-1}) ... P_1 U(t_1)`, equal to
/// `U(t_N) K`.
pub fn compile_interleaved(nf: &CompoundNormalForm, prop: &Propagator) -> Result<CMatrix> {
    check_prop_dim(nf, prop)?;
    let d = prop.dim();
    let mut m = CMatrix::identity(d, d);
    let mut last = 0.0;
    for e in nf.entries() {
        m = e.set.projector_matrix() * &*prop.at(e.time - last) * m;
        last = e.time;
    }
    Ok(m)
}

/// Probability evaluation with optional compatibility checking.
pub struct Evaluator<'a> {
    rho: &'a DensityOperator,
    prop: &'a Propagator,
    tol: Tolerances,
    checked: bool,
    max_len: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(rho: &'a DensityOperator, prop: &'a Propagator) -> Self {
        Self {
            rho,
            prop,
            tol: Tolerances::default(),
            checked: true,
            max_len: crate::compat::DEFAULT_MAX_SEQUENCE_LEN,
        }
    }

    pub fn tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Skips compatibility checks on inclusion–exclusion terms.
    pub fn unchecked(mut self) -> Self {
        self.checked = false;
        self
    }

    pub fn max_sequence_len(mut self, n: usize) -> Self {
        self.max_len = n;
        self
    }

    pub fn probability(&self, p: &Proposition) -> Result<f64> {
        let nf = normalize_with(p, &self.tol)?;
        self.probability_nf(&nf)
    }

    pub fn probability_nf(&self, nf: &NormalForm) -> Result<f64> {
        if self.rho.dim() != self.prop.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.prop.dim(),
                found: self.rho.dim(),
            });
        }
        let terms = &nf.terms;
        let k = terms.len();
        if k == 0 {
            return Ok(0.0);
        }
        if k == 1 {
            let p = compile_conjunct(&terms[0], self.prop)?.probability(self.rho);
            return Ok(p.clamp(0.0, 1.0));
        }
        if k > MAX_INCLUSION_EXCLUSION_TERMS {
            return Err(Error::TooComplex(format!(
                "{k} disjuncts exceed the inclusion–exclusion limit of {MAX_INCLUSION_EXCLUSION_TERMS}"
            )));
        }
        let checker = CompatChecker {
            tol: self.tol,
            max_len: self.max_len,
        };
        let mut total = 0.0;
        for mask in 1u32..(1 << k) {
            let mut conj: Option<Conjunct> = None;
            let mut empty = false;
            for (i, t) in terms.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    continue;
                }
                conj = match conj.take() {
                    None => Some(t.clone()),
                    Some(a) => a.conjoin(t, &self.tol)?,
                };
                if conj.is_none() {
                    empty = true;
                    break;
                }
            }
            if empty {
                continue;
            }
            let conj = conj.expect("non-empty mask");
            if self.checked {
                let v = checker.check_compound(&conj.compound, self.rho, self.prop)?;
                if !v.is_compatible() {
                    return Err(Error::IncompatibleProposition(v.witness));
                }
            }
            let p = compile_conjunct(&conj, self.prop)?.probability(self.rho);
            if mask.count_ones() % 2 == 1 {
                total += p;
            } else {
                total -= p;
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// `Pr(target ∧ given) / Pr(given)`.
    pub fn conditional(&self, target: &Proposition, given: &Proposition) -> Result<f64> {
        let pg = self.probability(given)?;
        if pg <= self.tol.prob {
            return Err(Error::ConditioningOnNull(pg));
        }
        let pj = self.probability(&target.clone().and(given.clone()))?;
        Ok((pj / pg).clamp(0.0, 1.0))
    }

    /// Conditional probability through the Lüders-updated state. `given`
    /// must be a single coin-free compound no later than any target atom.
    pub fn conditional_lueders(&self, target: &Proposition, given: &Proposition) -> Result<f64> {
        let nf = normalize_with(given, &self.tol)?;
        let compound = nf.as_compound().ok_or_else(|| {
            Error::InvalidProposition("conditioning proposition is not a single compound".into())
        })?;
        let last_given = compound.times().last().copied().unwrap_or(f64::NEG_INFINITY);
        if target.times().iter().any(|&t| t < last_given - self.tol.time) {
            return Err(Error::InvalidArgument(
                "target atoms precede the conditioning atoms".into(),
            ));
        }
        let k = compile_chain(compound, self.prop)?;
        let (post, norm) = match lueders_update(self.rho, k.matrix()) {
            Ok(x) => x,
            Err(Error::NullEvent { norm }) => return Err(Error::ConditioningOnNull(norm)),
            Err(e) => return Err(e),
        };
        debug_assert!(norm > self.tol.prob);
        Evaluator {
            rho: &post,
            prop: self.prop,
            tol: self.tol,
            checked: self.checked,
            max_len: self.max_len,
        }
        .probability(target)
    }
}

pub fn probability(p: &Proposition, rho: &DensityOperator, prop: &Propagator) -> Result<f64> {
    Evaluator::new(rho, prop).probability(p)
}

pub fn conditional_probability(
    target: &Proposition,
    given: &Proposition,
    rho: &DensityOperator,
    prop: &Propagator,
) -> Result<f64> {
    Evaluator::new(rho, prop).conditional(target, given)
}

/// Models an imperfect test of `exact` by the proxy proposition: with
/// probability `p_tt` the test reports true when the proxy holds and with
/// probability `p_tf` when it fails. The expectation is
/// `(p_tt - p_tf) Pr(proxy) + p_tf`.
pub fn approximate_compose(
    exact: &Proposition,
    proxy: Proposition,
    p_tt: f64,
    p_tf: f64,
) -> Result<Proposition> {
    for (name, p) in [("p_tt", p_tt), ("p_tf", p_tf)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("{name} = {p} outside [0, 1]")));
        }
    }
    let key = exact.fingerprint();
    let tt = Proposition::certain(p_tt, format!("TT#{key:016x}"));
    let tf = Proposition::certain(p_tf, format!("TF#{key:016x}"));
    Ok((tt & proxy.clone()) | (tf & !proxy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Basis, ONE, ZERO};

    fn qutrit() -> (Arc<HilbertSpace>, Arc<Basis>) {
        let s = Arc::new(HilbertSpace::with_dim(3).unwrap());
        let b = Basis::computational(&s);
        (s, b)
    }

    fn atom(b: &Arc<Basis>, members: &[usize], t: f64) -> Proposition {
        Proposition::atom(StationarySet::new(b, members.iter().copied()).unwrap(), t)
    }

    #[test]
    fn same_time_atoms_merge() {
        let (_, b) = qutrit();
        let p = atom(&b, &[0, 1], 1.0) & atom(&b, &[1, 2], 1.0);
        let nf = normalize(&p).unwrap();
        let c = nf.as_compound().unwrap();
        assert_eq!(c.entries().len(), 1);
        assert_eq!(c.entries()[0].set.labels(), vec!["1"]);
    }

    #[test]
    fn disjoint_and_is_false() {
        let (_, b) = qutrit();
        let p = atom(&b, &[0], 0.0) & atom(&b, &[1], 0.0);
        assert!(normalize(&p).unwrap().is_false());
    }

    #[test]
    fn or_of_one_time_merges_to_union() {
        let (_, b) = qutrit();
        let p = (atom(&b, &[0], 0.0) & atom(&b, &[2], 1.0))
            | (atom(&b, &[1], 0.0) & atom(&b, &[2], 1.0));
        let nf = normalize(&p).unwrap();
        let c = nf.as_compound().unwrap();
        assert_eq!(c.entries()[0].set.labels(), vec!["0", "1"]);
    }

    #[test]
    fn equal_time_different_bases_rejected() {
        let (s, b) = qutrit();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = CMatrix::from_row_slice(
            3,
            3,
            &[c(h, 0.0), c(h, 0.0), ZERO, c(h, 0.0), c(-h, 0.0), ZERO, ZERO, ZERO, ONE],
        );
        let other = Basis::from_vectors("rot", &s, vec!["a".into(), "b".into(), "c".into()], v)
            .unwrap();
        let p = atom(&b, &[0], 0.5) & atom(&other, &[0], 0.5);
        assert!(matches!(normalize(&p), Err(Error::IncompatibleBases(_))));
    }

    #[test]
    fn full_set_is_identity_chain() {
        let (s, b) = qutrit();
        let prop = Propagator::free(&s);
        let nf = CompoundNormalForm::single(StationarySet::full(&b), 2.0);
        let k = compile_chain(&nf, &prop).unwrap();
        assert_eq!(k.matrix(), &CMatrix::identity(3, 3));
    }

    #[test]
    fn negated_certain_one_is_false() {
        assert!(normalize(&!Proposition::certain(1.0, "x")).unwrap().is_false());
        assert!(normalize(&Proposition::certain(1.5, "x")).is_err());
    }

    #[test]
    fn complement_probability() {
        let (s, b) = qutrit();
        let prop = Propagator::free(&s);
        let rho = DensityOperator::maximally_mixed(&s);
        let p = atom(&b, &[0], 0.0) | atom(&b, &[1], 1.0);
        let pr = probability(&p, &rho, &prop).unwrap();
        let pn = probability(&!p, &rho, &prop).unwrap();
        assert!((pr + pn - 1.0).abs() < 1e-12);
        assert!((pr - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn approximate_composition_expectation() {
        let (s, b) = qutrit();
        let prop = Propagator::free(&s);
        let rho = DensityOperator::maximally_mixed(&s);
        let exact = atom(&b, &[0], 1.0);
        let proxy = atom(&b, &[0, 1], 1.0);
        let (p_tt, p_tf) = (0.9, 0.05);
        let approx = approximate_compose(&exact, proxy.clone(), p_tt, p_tf).unwrap();
        let x = probability(&proxy, &rho, &prop).unwrap();
        let y = probability(&approx, &rho, &prop).unwrap();
        assert!((y - ((p_tt - p_tf) * x + p_tf)).abs() < 1e-12);
    }
}
