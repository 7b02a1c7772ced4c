//! The twelve acceptance criteria at full size. Criteria run one at a time
//! so that the runtime bounds are not measured under contention.

use std::sync::Mutex;

use chaintrial_cli::verify::{run_criterion, Suite, VerifyOptions};

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(id: u32) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let dir = tempfile::tempdir().expect("scratch dir");
    let mut opts = VerifyOptions::new(Suite::Full);
    opts.scratch = dir.path().to_path_buf();
    let r = run_criterion(id, &opts);
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_01_singlet_correlations() {
    criterion(1);
}

#[test]
fn criterion_02_tsirelson_bound() {
    criterion(2);
}

#[test]
fn criterion_03_exclusivity() {
    criterion(3);
}

#[test]
fn criterion_04_compatibility_checker() {
    criterion(4);
}

#[test]
fn criterion_05_history_additivity() {
    criterion(5);
}

#[test]
fn criterion_06_lueders_consistency() {
    criterion(6);
}

#[test]
fn criterion_07_counting_statistics() {
    criterion(7);
}

#[test]
fn criterion_08_double_slit_channel() {
    criterion(8);
}

#[test]
fn criterion_09_detector_toy_decay() {
    criterion(9);
}

#[test]
fn criterion_10_light_quantum_test() {
    criterion(10);
}

#[test]
fn criterion_11_epr_lattice() {
    criterion(11);
}

#[test]
fn criterion_12_reproducibility() {
    criterion(12);
}
