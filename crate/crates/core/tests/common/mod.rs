#![allow(dead_code)]

use std::sync::Arc;

use chaintrial_core::hilbert::{c, Basis, CMatrix, DensityOperator, HilbertSpace, StationarySet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn space(d: usize) -> Arc<HilbertSpace> {
    Arc::new(HilbertSpace::with_dim(d).unwrap())
}

pub fn hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

pub fn unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    hermitian(rng, d).symmetric_eigen().eigenvectors
}

pub fn density(rng: &mut ChaCha8Rng, s: &Arc<HilbertSpace>) -> DensityOperator {
    let d = s.dim();
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &a * a.adjoint();
    let tr = m.trace();
    DensityOperator::new(s, m / tr).unwrap()
}

pub fn random_basis(rng: &mut ChaCha8Rng, s: &Arc<HilbertSpace>, name: &str) -> Arc<Basis> {
    let d = s.dim();
    let labels = (0..d).map(|i| format!("{name}{i}")).collect();
    Basis::from_vectors(name, s, labels, unitary(rng, d)).unwrap()
}

/// Non-empty proper-or-full random subset.
pub fn random_set(rng: &mut ChaCha8Rng, b: &Arc<Basis>) -> StationarySet {
    let d = b.dim();
    loop {
        let members: Vec<usize> = (0..d).filter(|_| rng.random::<bool>()).collect();
        if !members.is_empty() {
            return StationarySet::new(b, members).unwrap();
        }
    }
}

pub fn sorted_times(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += 0.1 + rng.random::<f64>();
            t
        })
        .collect()
}
