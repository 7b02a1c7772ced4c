mod common;

use chaintrial_core::compat::{
    classify_pair, detailed_balance_residual, fine_history_chains, history_residual,
    ordering_residual, CompatChecker, CompatKind,
};
use chaintrial_core::hilbert::{
    c, max_abs, Basis, CMatrix, CVector, DensityOperator, Projector, Propagator, StationarySet,
    ONE, ZERO,
};
use chaintrial_core::propositions::{
    compile_chain, compile_interleaved, normalize, probability, CompoundNormalForm, Entry,
    Evaluator, Proposition,
};
use chaintrial_core::Tolerances;
use common::*;
use proptest::prelude::*;

fn random_compound(
    rng: &mut rand_chacha::ChaCha8Rng,
    basis: &[std::sync::Arc<Basis>],
    n: usize,
) -> CompoundNormalForm {
    use rand::Rng;
    let times = sorted_times(rng, n);
    let entries = times
        .into_iter()
        .map(|time| {
            let b = &basis[rng.random_range(0..basis.len())];
            Entry { time, set: random_set(rng, b) }
        })
        .collect();
    CompoundNormalForm::new(entries, &Tolerances::default()).unwrap().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_time_probability_and_complement(seed in any::<u64>(), d in 2usize..6) {
        let mut r = rng(seed);
        let s = space(d);
        let prop = Propagator::new(&s, hermitian(&mut r, d)).unwrap();
        let rho = density(&mut r, &s);
        let b = random_basis(&mut r, &s, "b");
        let a = Proposition::atom(random_set(&mut r, &b), 0.7);
        let p = probability(&a, &rho, &prop).unwrap();
        let q = probability(&!a, &rho, &prop).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interleaved_form_matches_heisenberg(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut r = rng(seed);
        let s = space(d);
        let prop = Propagator::new(&s, hermitian(&mut r, d)).unwrap();
        let rho = density(&mut r, &s);
        let bases = [Basis::computational(&s), random_basis(&mut r, &s, "b")];
        let nf = random_compound(&mut r, &bases, n);
        let k = compile_chain(&nf, &prop).unwrap();
        let m = compile_interleaved(&nf, &prop).unwrap();
        let t_last = nf.entries().last().unwrap().time;
        prop_assert!(max_abs(&(&*prop.at(t_last) * k.matrix() - &m)) < 1e-10);
        let pm = chaintrial_core::hilbert::sandwich_trace(&m, rho.matrix());
        prop_assert!((k.probability(&rho) - pm).abs() < 1e-12);
    }

    #[test]
    fn conjunction_order_is_irrelevant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = space(3);
        let prop = Propagator::new(&s, hermitian(&mut r, 3)).unwrap();
        let rho = density(&mut r, &s);
        let b = Basis::computational(&s);
        let times = sorted_times(&mut r, 3);
        let atoms: Vec<Proposition> = times
            .iter()
            .map(|&t| Proposition::atom(random_set(&mut r, &b), t))
            .collect();
        let fwd = probability(&Proposition::all(atoms.clone()), &rho, &prop).unwrap();
        let rev = probability(&Proposition::all(atoms.into_iter().rev()), &rho, &prop).unwrap();
        prop_assert_eq!(fwd, rev);
    }

    #[test]
    fn coarse_chain_is_sum_of_fine_chains(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut r = rng(seed);
        let s = space(d);
        let prop = Propagator::new(&s, hermitian(&mut r, d)).unwrap();
        let bases = [Basis::computational(&s), random_basis(&mut r, &s, "b")];
        let nf = random_compound(&mut r, &bases, n);
        let k = compile_chain(&nf, &prop).unwrap();
        let sum = fine_history_chains(&nf, &prop)
            .unwrap()
            .into_iter()
            .fold(CMatrix::zeros(d, d), |acc, h| acc + h.matrix());
        prop_assert!(max_abs(&(sum - k.matrix())) < 1e-12);
    }

    #[test]
    fn commuting_family_is_additive(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let mut r = rng(seed);
        let s = space(d);
        let e: Vec<f64> = (0..d).map(|i| i as f64 * 0.37 + 0.1).collect();
        let h = CMatrix::from_diagonal(&CVector::from_iterator(d, e.iter().map(|&x| c(x, 0.0))));
        let prop = Propagator::new(&s, h).unwrap();
        let rho = density(&mut r, &s);
        let nf = random_compound(&mut r, &[Basis::computational(&s)], n);
        prop_assert!(history_residual(&nf, &rho, &prop).unwrap() < 1e-12);
    }

    #[test]
    fn lueders_product_rule(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let s = space(d);
        let prop = Propagator::new(&s, hermitian(&mut r, d)).unwrap();
        let rho = density(&mut r, &s);
        let b1 = random_basis(&mut r, &s, "u");
        let b2 = random_basis(&mut r, &s, "v");
        let a = Proposition::atom(random_set(&mut r, &b1), 0.4);
        let b = Proposition::atom(random_set(&mut r, &b2), 1.3);
        let ev = Evaluator::new(&rho, &prop);
        let pa = ev.probability(&a).unwrap();
        prop_assume!(pa > 1e-6);
        let pab = ev.probability(&a.clone().and(b.clone())).unwrap();
        let pb_a = ev.conditional_lueders(&b, &a).unwrap();
        prop_assert!((pab - pa * pb_a).abs() < 1e-12);
        let ratio = ev.conditional(&b, &a).unwrap();
        prop_assert!((ratio - pb_a).abs() < 1e-12 / pa.min(1.0) + 1e-12);
    }

    #[test]
    fn classify_pair_is_symmetric(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let s = space(d);
        let rho = density(&mut r, &s);
        let u = random_basis(&mut r, &s, "u");
        let v = random_basis(&mut r, &s, "v");
        let p1 = random_set(&mut r, &u).projector();
        let p2 = random_set(&mut r, &v).projector();
        let v = classify_pair(&p1, &p2, &rho).unwrap();
        let w = classify_pair(&p2, &p1, &rho).unwrap();
        prop_assert_eq!(v.kind, w.kind);
        prop_assert_eq!(v.residual, w.residual);
    }

    #[test]
    fn rank_one_detailed_balance(seed in any::<u64>(), d in 2usize..7) {
        use rand::Rng;
        let mut r = rng(seed);
        let s = space(d);
        let rho = density(&mut r, &s);
        let u = random_basis(&mut r, &s, "u");
        let v = random_basis(&mut r, &s, "v");
        let a = StationarySet::singleton(&u, r.random_range(0..d)).unwrap();
        let b = StationarySet::singleton(&v, r.random_range(0..d)).unwrap();
        let db = detailed_balance_residual(&a, &b, &rho);
        let res = ordering_residual(&a.projector_matrix(), &b.projector_matrix(), rho.matrix());
        prop_assert!((db.abs() - res.abs()).abs() < 1e-10);
    }

    #[test]
    fn state_inside_both_sets_is_deterministic(seed in any::<u64>(), d in 3usize..6) {
        // rho = |psi><psi| with psi in both subspaces: every ordering gives 1.
        let mut r = rng(seed);
        let s = space(d);
        let u = unitary(&mut r, d);
        let psi = u.column(0).into_owned();
        let w = unitary(&mut r, d - 1);
        let rest = u.columns(1, d - 1).into_owned();
        let rotated = &rest * w;
        let p1 = &psi * psi.adjoint() + rest.column(0) * rest.column(0).adjoint();
        let p2 = &psi * psi.adjoint() + rotated.column(0) * rotated.column(0).adjoint();
        let rho = DensityOperator::pure(&s, &psi).unwrap();
        let checker = CompatChecker { tol: Tolerances::default(), max_len: 4 };
        let v = checker.check_family(&[p1, p2], std::slice::from_ref(rho.matrix())).unwrap();
        prop_assert_eq!(v.kind, CompatKind::Deterministic);
        prop_assert!(v.residual < 1e-12);
    }
}

#[test]
fn deterministic_construction_up_to_length_four() {
    let s = space(3);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = CVector::from_vec(vec![ZERO, c(h, 0.0), c(h, 0.0)]);
    let e0 = CVector::from_vec(vec![ONE, ZERO, ZERO]);
    let p1 = Projector::new(&s, CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, ZERO]))).unwrap();
    let p2 = Projector::new(&s, &e0 * e0.adjoint() + &v * v.adjoint()).unwrap();
    let rho = DensityOperator::basis_state(&s, 0).unwrap();
    let checker = CompatChecker { tol: Tolerances::default(), max_len: 4 };
    let verdict = checker.classify_pair(&p1, &p2, &rho).unwrap();
    assert_eq!(verdict.kind, CompatKind::Deterministic);
    assert!(verdict.residual < 1e-12);
    assert!(verdict.commutator > 0.1);
}

#[test]
fn incompatible_two_time_construction_reports_residual() {
    let s = space(2);
    let b = Basis::computational(&s);
    let h = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let prop = Propagator::new(&s, h).unwrap();
    let rho = DensityOperator::maximally_mixed(&s);
    let nf = normalize(
        &(Proposition::atom(StationarySet::singleton(&b, 0).unwrap(), 0.0)
            & Proposition::atom(StationarySet::full(&b), 0.5)),
    )
    .unwrap();
    let nf = nf.as_compound().unwrap();
    let fine = fine_history_chains(nf, &prop).unwrap();
    assert_eq!(fine.len(), 2);
    let residual = history_residual(nf, &rho, &prop).unwrap();
    assert!(residual.is_finite());
    eprintln!("two-time residual {residual:e}");
}

#[test]
fn amplitude_matches_full_propagator() {
    let mut rng = rng(77);
    for d in 2..=5 {
        let p = Propagator::new(&space(d), hermitian(&mut rng, d)).unwrap();
        let u = p.at(1.7);
        for i in 0..d {
            for j in 0..d {
                assert!((p.amplitude(i, j, 1.7) - u[(i, j)]).norm() < 1e-12);
            }
        }
    }
}
