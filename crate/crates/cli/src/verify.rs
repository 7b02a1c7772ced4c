//! Acceptance suite. Each criterion runs at its stated size and tolerance
//! in the full suite; the fast suite shrinks trial counts but keeps every
//! threshold.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chaintrial_core::compat::{fine_history_chains, history_residual, ordering_residual, CompatChecker, CompatKind};
use chaintrial_core::hilbert::{c, max_abs, Basis, CMatrix, CVector, DensityOperator, HilbertSpace, Projector, Propagator, StationarySet, ONE, ZERO};
use chaintrial_core::propositions::{compile_chain, CompoundNormalForm, Entry, Evaluator, Proposition};
use chaintrial_core::rng::substream;
use chaintrial_core::Tolerances;
use chaintrial_optics::counting::{exact_count_distribution, tv_distance_to_poisson, uniform_site_probs};
use chaintrial_optics::propagate::propagate_with_report;
use chaintrial_optics::{cumulative_frames, run_double_slit, sample_counts, DoubleSlitConfig};
use chaintrial_scenarios::detector_toy::{build_detector_toy, DetectorToyConfig};
use chaintrial_scenarios::epr::{build_epr_lattice, classical_description, ehrenfest_check, LatticeConfig};
use chaintrial_scenarios::light_quantum::{light_quantum_test, FieldInit, LightQuantumConfig};
use chaintrial_scenarios::singlet::{build_singlet, chsh_random_search, chsh_value, random_axis, sample_chsh, ChshAxes};
use chaintrial_scenarios::{AxisSetting, Role};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::run::{execute, expectation_linearity, frame_convergence};

/// Fixed before any result was seen.
pub const VERIFY_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fast,
    Full,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub tol: Tolerances,
    /// Criterion numbers to run; empty runs all.
    pub only: Vec<u32>,
    /// Scratch space for scenario runs.
    pub scratch: PathBuf,
}

impl VerifyOptions {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            tol: Tolerances::default(),
            only: Vec::new(),
            scratch: std::env::temp_dir().join(format!("chaintrial-verify-{}", std::process::id())),
        }
    }

    fn full(&self) -> bool {
        self.suite == Suite::Full
    }

    /// `full` in the full suite, `fast` otherwise.
    fn pick<T>(&self, full: T, fast: T) -> T {
        if self.full() {
            full
        } else {
            fast
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub failures: Vec<String>,
    pub details: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {:>2} {status} {} ({:.2} s)", self.id, self.name, self.seconds);
        if !self.passed {
            s.push_str(": ");
            s.push_str(&self.failures.join("; "));
        }
        s
    }
}

/// Collects failed conditions of one criterion.
#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

type Body = fn(&VerifyOptions, &mut Gate) -> Result<Value, String>;

pub const CRITERIA: [(u32, &str); 12] = [
    (1, "singlet correlations"),
    (2, "Tsirelson bound"),
    (3, "exclusivity"),
    (4, "compatibility checker"),
    (5, "history additivity"),
    (6, "Lueders consistency"),
    (7, "counting statistics"),
    (8, "double-slit channel"),
    (9, "detector toy decay"),
    (10, "light-quantum test"),
    (11, "EPR lattice"),
    (12, "reproducibility"),
];

fn body(id: u32) -> Body {
    match id {
        1 => singlet,
        2 => tsirelson,
        3 => exclusivity,
        4 => compatibility,
        5 => additivity,
        6 => lueders,
        7 => counting,
        8 => double_slit,
        9 => detector_toy,
        10 => light_quantum,
        11 => epr,
        12 => reproducibility,
        _ => unreachable!("criteria are numbered 1 to 12"),
    }
}

pub fn run_criterion(id: u32, opts: &VerifyOptions) -> CriterionResult {
    let (_, name) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let mut gate = Gate::default();
    let details = match body(id)(opts, &mut gate) {
        Ok(v) => v,
        Err(e) => {
            gate.failures.push(format!("error: {e}"));
            Value::Null
        }
    };
    CriterionResult {
        id,
        name,
        passed: gate.failures.is_empty(),
        seconds: start.elapsed().as_secs_f64(),
        failures: gate.failures,
        details,
    }
}

pub fn verify(opts: &VerifyOptions) -> Vec<CriterionResult> {
    let ids: Vec<u32> = CRITERIA
        .iter()
        .map(|c| c.0)
        .filter(|id| opts.only.is_empty() || opts.only.contains(id))
        .collect();
    let out = ids.into_iter().map(|id| run_criterion(id, opts)).collect();
    let _ = std::fs::remove_dir_all(&opts.scratch);
    out
}

fn seed_for(id: u64) -> u64 {
    substream(VERIFY_SEED, 0x7665_7269_6679, id).random()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn singlet(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let start = Instant::now();
    let s = build_singlet().map_err(err)?;
    let mut rng = substream(seed_for(1), 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = random_axis(&mut rng, Role::Alice);
        let y = random_axis(&mut rng, Role::Bob);
        for a in [1i8, -1] {
            for b in [1i8, -1] {
                let exact = (1.0 - f64::from(a * b) * x.dot(&y)) / 4.0;
                worst = worst.max((s.joint_probability(&x, &y, a, b).map_err(err)? - exact).abs());
            }
        }
    }
    g.require(worst <= 1e-12, || format!("joint probability deviates by {worst:e}"));
    let x = AxisSetting::in_plane(0.0, Role::Alice);
    let y = AxisSetting::in_plane(1.1, Role::Bob);
    let n = opts.pick(100_000u64, 20_000);
    let records = s.sample_pairs(&x, &y, n, seed_for(101)).map_err(err)?;
    let mut max_z = 0.0f64;
    for a in [1i8, -1] {
        for b in [1i8, -1] {
            let p = (1.0 - f64::from(a * b) * x.dot(&y)) / 4.0;
            let hits = records.iter().filter(|r| r.bits["A+"] == (a > 0) && r.bits["B+"] == (b > 0)).count();
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let z = (hits as f64 / n as f64 - p) / sigma;
            max_z = max_z.max(z.abs());
        }
    }
    g.require(max_z <= 4.0, || format!("sampled frequency {max_z:.2} sigma from exact"));
    let secs = start.elapsed().as_secs_f64();
    g.require(secs < 10.0, || format!("runtime {secs:.1} s exceeds 10 s"));
    Ok(json!({ "formula_max_deviation": worst, "n_trials": n, "max_abs_z": max_z, "seconds": secs }))
}

fn tsirelson(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let s = build_singlet().map_err(err)?;
    let bound = 2.0 * SQRT_2;
    let axes = ChshAxes::optimal();
    let exact = chsh_value(&s, &axes).map_err(err)?;
    g.require((exact - bound).abs() <= 1e-12, || format!("optimal S = {exact} differs from 2 sqrt 2"));
    let quads = opts.pick(100_000u64, 10_000);
    let best = chsh_random_search(&s, quads, seed_for(2)).map_err(err)?;
    g.require(best <= bound + 1e-9, || format!("random search reached {best}"));
    let n = opts.pick(100_000u64, 20_000);
    let sampled = sample_chsh(&s, &axes, n, seed_for(102)).map_err(err)?;
    let mut seeds: Vec<u64> = sampled.correlators.iter().map(|c| c.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    g.require(seeds.len() == 4, || "correlator populations share a seed".into());
    let z = (sampled.s - bound) / sampled.stderr;
    g.require(z.abs() <= 4.0, || format!("sampled S = {} is {z:.2} sigma from 2 sqrt 2", sampled.s));
    Ok(json!({ "S_exact": exact, "random_quadruples": quads, "random_max": best, "S_sampled": sampled.s, "stderr": sampled.stderr, "z": z }))
}

fn scratch(opts: &VerifyOptions, name: &str) -> PathBuf {
    opts.scratch.join(name)
}

fn exclusivity(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let n = opts.pick(10_000u64, 2_000);
    let mut per = serde_json::Map::new();
    let sampled = [
        ScenarioKind::Singlet,
        ScenarioKind::Chsh,
        ScenarioKind::Spin1Compat,
        ScenarioKind::Epr,
        ScenarioKind::LightQuantum,
        ScenarioKind::DetectorToy,
    ];
    let mut runs: Vec<RunConfig> = sampled.iter().map(|&k| RunConfig::default_for(k)).collect();
    let mut coherent = RunConfig::default_for(ScenarioKind::LightQuantum);
    coherent.params = ScenarioParams::LightQuantum(LightQuantumConfig {
        initial: FieldInit::Coherent { alpha: 1.0 },
        ..LightQuantumConfig::default()
    });
    runs.push(coherent);
    for (i, cfg) in runs.iter_mut().enumerate() {
        cfg.seed = seed_for(300 + i as u64);
        cfg.n_trials = n;
        match &mut cfg.params {
            ScenarioParams::Chsh(p) => p.random_quadruples = 0,
            ScenarioParams::Singlet(p) => p.random_pairs = 0,
            _ => {}
        }
        let dir = scratch(opts, &format!("c3-{i}"));
        let report = execute(cfg, &dir).map_err(err)?;
        let v = report.summary["results"]["exclusivity_violations"].as_u64().ok_or("no exclusivity count")?;
        g.require(v == 0, || format!("{} has {v} violations", cfg.scenario.name()));
        per.insert(format!("{}#{i}", cfg.scenario.name()), json!(v));
    }
    Ok(json!({ "trials_per_population": n, "violations": per }))
}

fn compatibility(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let s = Arc::new(HilbertSpace::with_dim(2).map_err(err)?);
    let ket0 = CVector::from_vec(vec![ONE, ZERO]);
    let plus = CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    let p1 = Projector::from_ket(&s, &ket0).map_err(err)?;
    let p2 = Projector::from_ket(&s, &plus).map_err(err)?;
    let rho = DensityOperator::basis_state(&s, 0).map_err(err)?;
    let checker = CompatChecker { tol: opts.tol, max_len: 3 };
    let v = checker.classify_pair(&p1, &p2, &rho).map_err(err)?;
    let r = ordering_residual(p1.matrix(), p2.matrix(), rho.matrix()).abs();
    g.require(v.kind == CompatKind::Incompatible, || format!("z/x pair classified {:?}", v.kind));
    g.require((r - 0.25).abs() <= 1e-10, || format!("ordering residual {r}"));

    let s3 = Arc::new(HilbertSpace::with_dim(3).map_err(err)?);
    let h = FRAC_1_SQRT_2;
    let e0 = CVector::from_vec(vec![ONE, ZERO, ZERO]);
    let w = CVector::from_vec(vec![ZERO, c(h, 0.0), c(h, 0.0)]);
    let c1 = Projector::new(&s3, CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ZERO]))).map_err(err)?;
    let c2 = Projector::new(&s3, &e0 * e0.adjoint() + &w * w.adjoint()).map_err(err)?;
    let rho3 = DensityOperator::basis_state(&s3, 0).map_err(err)?;
    let det = CompatChecker { tol: opts.tol, max_len: 4 }.classify_pair(&c1, &c2, &rho3).map_err(err)?;
    g.require(det.kind == CompatKind::Deterministic, || format!("deterministic construction classified {:?}", det.kind));
    g.require(det.residual < 1e-12, || format!("permutation residual {:e}", det.residual));
    Ok(json!({ "pair": v, "ordering_residual": r, "deterministic": det }))
}

fn hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

fn density(rng: &mut impl Rng, s: &Arc<HilbertSpace>) -> Result<DensityOperator, String> {
    let d = s.dim();
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityOperator::new(s, m / tr).map_err(err)
}

fn random_basis(rng: &mut impl Rng, s: &Arc<HilbertSpace>, name: &str) -> Result<Arc<Basis>, String> {
    let d = s.dim();
    let u = hermitian(rng, d).symmetric_eigen().eigenvectors;
    let labels = (0..d).map(|i| format!("{name}{i}")).collect();
    Basis::from_vectors(name, s, labels, u).map_err(err)
}

fn random_set(rng: &mut impl Rng, b: &Arc<Basis>) -> Result<StationarySet, String> {
    loop {
        let members: Vec<usize> = (0..b.dim()).filter(|_| rng.random::<bool>()).collect();
        if !members.is_empty() {
            return StationarySet::new(b, members).map_err(err);
        }
    }
}

fn random_compound(rng: &mut impl Rng, bases: &[Arc<Basis>], n: usize, tol: &Tolerances) -> Result<Option<CompoundNormalForm>, String> {
    let mut t = 0.0;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        t += 0.1 + rng.random::<f64>();
        let b = &bases[rng.random_range(0..bases.len())];
        entries.push(Entry { time: t, set: random_set(rng, b)? });
    }
    CompoundNormalForm::new(entries, tol).map_err(err)
}

fn space(d: usize) -> Result<Arc<HilbertSpace>, String> {
    Ok(Arc::new(HilbertSpace::with_dim(d).map_err(err)?))
}

fn additivity(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let mut rng = substream(seed_for(5), 0, 0);
    let (mut worst_chain, mut worst_hist, mut done) = (0.0f64, 0.0f64, 0);
    while done < 100 {
        let d = rng.random_range(2..=4usize);
        let n = rng.random_range(1..=3usize);
        let s = space(d)?;
        let prop = Propagator::new(&s, hermitian(&mut rng, d)).map_err(err)?;
        let bases = [Basis::computational(&s), random_basis(&mut rng, &s, "b")?];
        let Some(nf) = random_compound(&mut rng, &bases, n, &opts.tol)? else {
            continue;
        };
        let k = compile_chain(&nf, &prop).map_err(err)?;
        let sum = fine_history_chains(&nf, &prop)
            .map_err(err)?
            .into_iter()
            .fold(CMatrix::zeros(d, d), |acc, h| acc + h.matrix());
        worst_chain = worst_chain.max(max_abs(&(sum - k.matrix())));

        // Commuting family: diagonal Hamiltonian, stationary-basis sets.
        let h = CMatrix::from_diagonal(&CVector::from_iterator(d, (0..d).map(|i| c(0.37 * i as f64 + 0.1, 0.0))));
        let diag = Propagator::new(&s, h).map_err(err)?;
        let rho = density(&mut rng, &s)?;
        if let Some(nf) = random_compound(&mut rng, &bases[..1], n, &opts.tol)? {
            worst_hist = worst_hist.max(history_residual(&nf, &rho, &diag).map_err(err)?);
        }
        done += 1;
    }
    g.require(worst_chain <= 1e-12, || format!("coarse chain differs from fine sum by {worst_chain:e}"));
    g.require(worst_hist <= 1e-12, || format!("commuting history residual {worst_hist:e}"));
    Ok(json!({ "instances": done, "chain_max_deviation": worst_chain, "commuting_history_residual": worst_hist }))
}

fn lueders(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let mut rng = substream(seed_for(6), 0, 0);
    let (mut worst, mut done, mut skipped) = (0.0f64, 0, 0);
    while done < 100 {
        let d = rng.random_range(2..=4usize);
        let s = space(d)?;
        let prop = Propagator::new(&s, hermitian(&mut rng, d)).map_err(err)?;
        let rho = density(&mut rng, &s)?;
        let b1 = random_basis(&mut rng, &s, "u")?;
        let b2 = random_basis(&mut rng, &s, "v")?;
        let a = Proposition::atom(random_set(&mut rng, &b1)?, 0.4);
        let b = Proposition::atom(random_set(&mut rng, &b2)?, 1.3);
        let ev = Evaluator::new(&rho, &prop).tolerances(opts.tol);
        let pa = ev.probability(&a).map_err(err)?;
        if pa <= 1e-6 {
            skipped += 1;
            continue;
        }
        let pab = ev.probability(&a.clone().and(b.clone())).map_err(err)?;
        let pb_a = ev.conditional_lueders(&b, &a).map_err(err)?;
        worst = worst.max((pab - pa * pb_a).abs());
        done += 1;
    }
    g.require(worst <= 1e-12, || format!("product rule off by {worst:e}"));
    Ok(json!({ "instances": done, "skipped_null": skipped, "max_deviation": worst }))
}

fn counting(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let (l, m) = (8, 16);
    let dist = exact_count_distribution(&uniform_site_probs(l, m, 2.0)).map_err(err)?;
    let tv = tv_distance_to_poisson(&dist, 2.0);
    let above: f64 = dist.iter().skip(l + 1).sum();
    g.require(tv < 0.05, || format!("total-variation distance to Poisson(2) is {tv:.4}"));
    g.require(above == 0.0, || format!("Pr(N > L) = {above:e}"));

    // Dispersion of double-slit pixel counts at an exposure giving a peak mean of 100.
    let res = run_double_slit(&DoubleSlitConfig::default()).map_err(err)?;
    let t = 100.0 / res.rates.max();
    let means = res.rates.scaled(t);
    let draws = 10_000u64;
    let npx = means.values.len();
    let (mut s1, mut s2) = (vec![0.0f64; npx], vec![0.0f64; npx]);
    let seed = seed_for(7);
    for trial in 0..draws {
        let f = sample_counts(&means, t, seed, trial).map_err(err)?;
        for (i, &k) in f.counts.iter().enumerate() {
            s1[i] += k as f64;
            s2[i] += (k * k) as f64;
        }
    }
    let n = draws as f64;
    let (mut lo, mut hi, mut pixels) = (f64::INFINITY, 0.0f64, 0);
    for ((a, b), mu) in s1.iter().zip(&s2).zip(&means.values) {
        if *mu < 50.0 {
            continue;
        }
        let mean = a / n;
        let var = (b - n * mean * mean) / (n - 1.0);
        let idx = var / mean;
        lo = lo.min(idx);
        hi = hi.max(idx);
        pixels += 1;
    }
    g.require(pixels > 0, || "no pixel reaches mean 50".into());
    g.require(lo >= 0.9 && hi <= 1.1, || format!("dispersion index range [{lo:.4}, {hi:.4}]"));
    let _ = opts;
    Ok(json!({
        "tv_distance": tv,
        "pr_above_sites": above,
        "distribution": dist,
        "exposure": t,
        "draws": draws,
        "pixels_mean_ge_50": pixels,
        "dispersion_min": lo,
        "dispersion_max": hi,
    }))
}

fn double_slit(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let start = Instant::now();
    let cfg = DoubleSlitConfig::default();
    let res = run_double_slit(&cfg).map_err(err)?;
    let predicted = cfg.predicted_fringe_period();
    let period = res.fringe_period.ok_or("no fringes found")?;
    g.require((period - predicted).abs() <= cfg.grid.dx, || {
        format!("fringe period {:.3} um vs {:.3} um", period * 1e6, predicted * 1e6)
    });
    // Unfiltered propagation of the slit field conserves power outright.
    let (_, plain) = propagate_with_report(&res.transmitted.padded(cfg.pad_factor).map_err(err)?, cfg.z_detector - cfg.z_slit).map_err(err)?;
    let conservation = (plain.power_out + plain.evanescent_loss - plain.power_in).abs() / plain.power_in;
    let defect = res.propagation.propagating_power_defect();
    g.require(conservation <= 1e-10, || format!("unfiltered power defect {conservation:e}"));
    g.require(defect <= 1e-10, || format!("band-limited power accounting defect {defect:e}"));
    let times = [0.1, 0.2, 0.4];
    let linearity = expectation_linearity(&res.detector_field, &cfg.detector, &times).map_err(err)?;
    g.require(linearity <= 1e-12, || format!("expectation map nonlinear in t by {linearity:e}"));
    let seed = seed_for(8);
    let frames = cumulative_frames(&res.rates, &times, seed, 0).map_err(err)?;
    let monotone = frames.windows(2).all(|w| w[0].counts.iter().zip(&w[1].counts).all(|(a, b)| a <= b));
    g.require(monotone, || "cumulative frames decrease".into());
    let trials = opts.pick(1000u64, 200);
    let conv = frame_convergence(&res.rates, &times, seed, trials).map_err(err)?;
    for c in &conv {
        g.require(c.beyond_4_sigma == 0, || {
            format!("t = {} s: {} of {} pixels beyond 4 sigma (max |z| {:.2})", c.t, c.beyond_4_sigma, c.pixels, c.max_abs_z)
        });
    }
    let secs = start.elapsed().as_secs_f64();
    g.require(secs < 120.0, || format!("runtime {secs:.1} s exceeds 2 min"));
    Ok(json!({
        "fringe_period": period,
        "fringe_period_predicted": predicted,
        "unfiltered_power_defect": conservation,
        "band_limited_defect": defect,
        "band_limit_loss": res.propagation.band_limit_loss,
        "linearity": linearity,
        "frame_totals": frames.iter().map(|f| f.total()).collect::<Vec<_>>(),
        "convergence": conv,
        "seconds": secs,
    }))
}

fn detector_toy(_: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let toy = build_detector_toy(DetectorToyConfig::default()).map_err(err)?;
    let fit = toy.fit_decay(0.5, 3.0, 26).map_err(err)?;
    g.require(fit.relative_error < 0.05, || {
        format!("fitted rate {:.4} vs golden rule {:.4}", fit.gamma_fit, fit.gamma_golden)
    });
    Ok(json!({ "levels": toy.cfg.levels, "gamma_fit": fit.gamma_fit, "gamma_golden_rule": fit.gamma_golden, "relative_error": fit.relative_error }))
}

fn light_quantum(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let n = opts.pick(10_000u64, 10_000);
    let fock = light_quantum_test(LightQuantumConfig::default(), n, seed_for(10)).map_err(err)?;
    g.require(fock.agreements == n, || format!("Fock 1 agreement rate {}", fock.agreement_rate));
    let coherent_cfg = LightQuantumConfig {
        initial: FieldInit::Coherent { alpha: 1.0 },
        ..LightQuantumConfig::default()
    };
    let coherent = light_quantum_test(coherent_cfg, n, seed_for(110)).map_err(err)?;
    g.require(coherent.agreement_rate < 1.0, || "coherent state agreed in every trial".into());
    Ok(json!({ "fock1": fock, "coherent": coherent }))
}

/// Largest tolerated deviation of the packet centre from a straight line, sites.
pub const EHRENFEST_TOL: f64 = 0.05;

fn epr(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let lat = build_epr_lattice(LatticeConfig::default()).map_err(err)?;
    let n = opts.pick(10_000u64, 2_000);
    let mut out = serde_json::Map::new();
    for (k, (family, pairs)) in [
        ("position", lat.position_propositions().map_err(err)?),
        ("momentum", lat.momentum_propositions().map_err(err)?),
    ]
    .into_iter()
    .enumerate()
    {
        let (reports, _) = lat.relations(&pairs, n, seed_for(11 + 100 * k as u64), &opts.tol).map_err(err)?;
        let disagreements: u64 = reports.iter().map(|r| r.disagreements).sum();
        g.require(classical_description(&reports), || format!("{family} relations fail ({disagreements} disagreeing trials)"));
        out.insert(family.into(), json!({ "trials": n, "disagreements": disagreements, "holds": classical_description(&reports) }));
    }
    let e = EhrenfestParams::default();
    let ehr = ehrenfest_check(e.sites, e.sigma, e.k0, e.t_max, e.steps).map_err(err)?;
    g.require(ehr.max_residual <= EHRENFEST_TOL, || format!("packet centre deviates {:.4} sites from linear drift", ehr.max_residual));
    out.insert(
        "ehrenfest".into(),
        json!({ "max_residual": ehr.max_residual, "tolerance": EHRENFEST_TOL, "fitted_velocity": ehr.fitted_velocity, "group_velocity": ehr.group_velocity }),
    );
    Ok(Value::Object(out))
}

/// Configurations rerun at several thread counts.
pub fn reproducibility_configs(n: u64) -> Vec<RunConfig> {
    ScenarioKind::ALL
        .iter()
        .map(|&k| {
            let mut cfg = RunConfig::default_for(k);
            cfg.seed = seed_for(12);
            cfg.n_trials = n;
            match &mut cfg.params {
                ScenarioParams::Chsh(p) => p.random_quadruples = 1000,
                ScenarioParams::Singlet(p) => p.random_pairs = 10,
                _ => {}
            }
            cfg
        })
        .collect()
}

fn csv_files(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).map_err(err)? {
        let p = e.map_err(err)?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            out.push((name, std::fs::read(&p).map_err(err)?));
        }
    }
    out.sort();
    Ok(out)
}

fn reproducibility(opts: &VerifyOptions, g: &mut Gate) -> Result<Value, String> {
    let n = opts.pick(2_000u64, 500);
    let mut compared = 0;
    for cfg in reproducibility_configs(n) {
        let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
        for threads in [1usize, 4, 8] {
            let dir = scratch(opts, &format!("c12-{}-{threads}", cfg.scenario.name()));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
            pool.install(|| execute(&cfg, &dir)).map_err(err)?;
            let files = csv_files(&dir)?;
            match &reference {
                None => reference = Some(files),
                Some(r) => {
                    g.require(r == &files, || format!("{} CSVs differ at {threads} threads", cfg.scenario.name()));
                    compared += files.len();
                }
            }
        }
    }
    Ok(json!({ "thread_counts": [1, 4, 8], "csv_files_compared": compared, "n_trials": n }))
}
