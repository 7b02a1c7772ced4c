mod common;

use std::sync::Arc;

use chaintrial_core::hilbert::{c, Basis, CMatrix, DensityOperator, Propagator, StationarySet, ONE, ZERO};
use chaintrial_core::propositions::{probability, Proposition};
use chaintrial_core::sampler::{
    estimate, evaluate_bits, truth_value, write_trials_csv, Granularity, HistorySampler,
    ScheduleStep,
};
use chaintrial_core::{Error, Tolerances};
use common::*;

fn steps(b: &Arc<Basis>, times: &[f64]) -> Vec<ScheduleStep> {
    times.iter().map(|&time| ScheduleStep { time, basis: b.clone() }).collect()
}

#[test]
fn pure_basis_state_always_occupied() {
    let s = space(3);
    let b = Basis::computational(&s);
    let rho = DensityOperator::basis_state(&s, 0).unwrap();
    let prop = Propagator::free(&s);
    let sampler = HistorySampler::new(steps(&b, &[1.0]), Granularity::Fine, &rho, &prop).unwrap();
    for r in sampler.sample_many(11, 500).unwrap() {
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0].state, 0);
    }
}

#[test]
fn rabi_pi_pulse_flips_every_trial() {
    let s = space(2);
    let b = Basis::computational(&s);
    let omega = 2.3;
    let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]) * c(omega / 2.0, 0.0);
    let prop = Propagator::new(&s, h).unwrap();
    let rho = DensityOperator::basis_state(&s, 0).unwrap();
    let t = std::f64::consts::PI / omega;
    for g in [Granularity::Fine, Granularity::Coarse(vec![
        vec![StationarySet::singleton(&b, 0).unwrap(), StationarySet::singleton(&b, 1).unwrap()],
        vec![StationarySet::singleton(&b, 0).unwrap(), StationarySet::singleton(&b, 1).unwrap()],
    ])] {
        let sampler = HistorySampler::new(steps(&b, &[0.0, t]), g, &rho, &prop).unwrap();
        for r in sampler.sample_many(3, 1000).unwrap() {
            assert_eq!(r.history[0].state, 0);
            assert_eq!(r.history[1].state, 1);
        }
    }
}

#[test]
fn estimate_converges_to_chain_probability() {
    let mut r = rng(42);
    let s = space(3);
    let prop = Propagator::new(&s, hermitian(&mut r, 3)).unwrap();
    let rho = density(&mut r, &s);
    let b = Basis::computational(&s);
    let p = Proposition::atom(StationarySet::new(&b, [0, 2]).unwrap(), 0.5)
        & Proposition::atom(StationarySet::new(&b, [1]).unwrap(), 1.4)
        & Proposition::certain(0.7, "eff");
    let exact = probability(&p, &rho, &prop).unwrap();
    let est = estimate(&p, &rho, &prop, 40_000, 9).unwrap();
    assert!((est.mean - exact).abs() < 4.0 * est.stderr, "{} vs {exact}", est.mean);
    assert!((est.stderr - (est.mean * (1.0 - est.mean) / 4e4).sqrt()).abs() < 1e-15);
}

#[test]
fn deterministic_estimate_has_zero_stderr() {
    let s = space(2);
    let b = Basis::computational(&s);
    let rho = DensityOperator::basis_state(&s, 1).unwrap();
    let prop = Propagator::free(&s);
    let p = Proposition::atom(StationarySet::singleton(&b, 1).unwrap(), 0.0);
    let est = estimate(&p, &rho, &prop, 1000, 1).unwrap();
    assert_eq!(est.mean, 1.0);
    assert_eq!(est.stderr, 0.0);
}

#[test]
fn bits_follow_history() {
    let s = space(3);
    let b = Basis::computational(&s);
    let rho = DensityOperator::maximally_mixed(&s);
    let prop = Propagator::free(&s);
    let sampler = HistorySampler::new(steps(&b, &[0.0]), Granularity::Fine, &rho, &prop).unwrap();
    let a = Proposition::atom(StationarySet::new(&b, [0, 1]).unwrap(), 0.0);
    let props = vec![("a".to_string(), a.clone()), ("not_a".to_string(), !a.clone())];
    let tol = Tolerances::default();
    for mut rec in sampler.sample_many(8, 200).unwrap() {
        evaluate_bits(&mut rec, &props, &tol).unwrap();
        assert_eq!(rec.bits["a"], rec.history[0].state < 2);
        assert_ne!(rec.bits["a"], rec.bits["not_a"]);
    }
    let late = Proposition::atom(StationarySet::singleton(&b, 0).unwrap(), 2.0);
    let rec = sampler.sample(8, 0).unwrap();
    assert!(matches!(truth_value(&rec, &late, &tol), Err(Error::MissingTime(_))));
}

#[test]
fn incompatible_coarse_family_rejected() {
    let s = space(2);
    let z = Basis::computational(&s);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let x = Basis::from_vectors(
        "x",
        &s,
        vec!["+".into(), "-".into()],
        CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
    )
    .unwrap();
    let rho = DensityOperator::basis_state(&s, 0).unwrap();
    let prop = Propagator::free(&s);
    let part = |b: &Arc<Basis>| vec![StationarySet::singleton(b, 0).unwrap(), StationarySet::singleton(b, 1).unwrap()];
    let schedule = vec![
        ScheduleStep { time: 0.0, basis: z.clone() },
        ScheduleStep { time: 1.0, basis: x.clone() },
    ];
    let res = HistorySampler::new(schedule, Granularity::Coarse(vec![part(&z), part(&x)]), &rho, &prop);
    assert!(matches!(res, Err(Error::IncompatibleProposition(_))));
}

#[test]
fn csv_is_thread_count_invariant() {
    let mut r = rng(5);
    let s = space(4);
    let prop = Propagator::new(&s, hermitian(&mut r, 4)).unwrap();
    let rho = density(&mut r, &s);
    let b = Basis::computational(&s);
    let sampler = HistorySampler::new(steps(&b, &[0.0, 0.3, 0.9]), Granularity::Fine, &rho, &prop).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let recs = sampler.sample_many(77, 2000).unwrap();
            let mut buf = Vec::new();
            write_trials_csv(&mut buf, &recs).unwrap();
            buf
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
    assert!(String::from_utf8(one).unwrap().starts_with("trial,time,occupied_label,prop_id,bit\n"));
}
