use chaintrial_optics::constants::photon_energy;
use chaintrial_optics::counting::{exact_count_distribution, site_count_distribution, tv_distance_to_poisson, uniform_site_probs};
use chaintrial_optics::counts::{cumulative_frames, sample_counts};
use chaintrial_optics::detector::{expectation_map, pixel_power_fractions, DetectorParams, PixelMap};
use chaintrial_optics::gaussian::gaussian_field;
use chaintrial_optics::GridSpec;
use proptest::prelude::*;

fn reference_detector() -> DetectorParams {
    DetectorParams {
        pixel_size: 5e-6,
        nx_pixels: 50,
        ny_pixels: 50,
        center: (0.0, 0.0),
        eta_det: 0.1,
        eta_amp: 1.0,
        fp_rate: 0.0,
        power_w: 1e-14,
        wavelength: 0.710e-6,
    }
}

#[test]
fn photon_rate_arithmetic() {
    let det = reference_detector();
    assert!((photon_energy(0.710e-6) / 2.7978e-19 - 1.0).abs() < 1e-4);
    let f = gaussian_field(60e-6, 60e-6, 0.710e-6, 0.0, GridSpec::square(1024, 0.5e-6)).unwrap();
    let frac = pixel_power_fractions(&f, &det).unwrap().sum();
    let m = expectation_map(&f, &det, 0.1).unwrap();
    let expect = 0.1 * 0.1 * 1e-14 / photon_energy(0.710e-6) * frac;
    assert!((m.sum() / expect - 1.0).abs() < 1e-12);
    assert!((det.photon_rate() - 3574.2).abs() < 1.0);
}

#[test]
fn expectation_is_linear_in_time_and_power() {
    let f = gaussian_field(40e-6, 40e-6, 0.710e-6, 2e-3, GridSpec::square(512, 1e-6)).unwrap();
    let mut det = reference_detector();
    det.pixel_size = 5e-6;
    det.fp_rate = 0.3;
    let base = expectation_map(&f, &det, 0.1).unwrap();
    for (s, got) in [
        (2.0, expectation_map(&f, &det, 0.2).unwrap()),
        (4.0, expectation_map(&f, &det, 0.4).unwrap()),
    ] {
        for (a, b) in base.values.iter().zip(&got.values) {
            assert!((s * a - b).abs() <= 1e-12 * b.abs());
        }
    }
    det.fp_rate = 0.0;
    let one = expectation_map(&f, &det, 0.1).unwrap();
    det.power_w *= 3.0;
    let three = expectation_map(&f, &det, 0.1).unwrap();
    for (a, b) in one.values.iter().zip(&three.values) {
        assert!((3.0 * a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn detector_outside_grid_is_rejected() {
    let f = gaussian_field(40e-6, 40e-6, 0.710e-6, 0.0, GridSpec::square(128, 1e-6)).unwrap();
    assert!(expectation_map(&f, &reference_detector(), 1.0).is_err());
}

#[test]
fn poisson_moments_at_mean_100() {
    let n = 10_000;
    let m = PixelMap { nx: 1, ny: 1, values: vec![100.0] };
    let draws: Vec<f64> = (0..n)
        .map(|j| sample_counts(&m, 1.0, 42, j).unwrap().counts[0] as f64)
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 100.0).abs() < 4.0 * (100.0 / n as f64).sqrt(), "{mean}");
    assert!((0.9..=1.1).contains(&(var / mean)), "{}", var / mean);
}

#[test]
fn counts_do_not_depend_on_thread_count() {
    let m = PixelMap { nx: 20, ny: 20, values: (0..400).map(|i| (i % 17) as f64).collect() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cumulative_frames(&m, &[0.1, 0.2, 0.4], 7, 3).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
}

// Every assignment of an ionization subinterval (or none) to each site.
fn brute_force(probs: &[Vec<f64>]) -> Vec<f64> {
    let (l, m) = (probs.len(), probs[0].len());
    let mut dist = vec![0.0; l + 1];
    let combos = (m + 1).pow(l as u32);
    for code in 0..combos {
        let mut c = code;
        let mut w = 1.0;
        let mut used = vec![false; m];
        for row in probs {
            let k = c % (m + 1);
            c /= m + 1;
            // k == m: never ionizes.
            let survive: f64 = row[..k.min(m)].iter().map(|p| 1.0 - p).product();
            w *= if k == m { survive } else { survive * row[k] };
            if k < m {
                used[k] = true;
            }
        }
        dist[used.iter().filter(|&&u| u).count()] += w;
    }
    dist
}

fn probs_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(l, m)| prop::collection::vec(prop::collection::vec(0.0..0.6f64, m), l))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_distribution_matches_enumeration(probs in probs_strategy()) {
        let dp = exact_count_distribution(&probs).unwrap();
        let bf = brute_force(&probs);
        for (a, b) in dp.iter().zip(&bf) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn counts_never_exceed_sites(probs in probs_strategy()) {
        let l = probs.len();
        let dp = exact_count_distribution(&probs).unwrap();
        prop_assert_eq!(dp.len(), l + 1);
        prop_assert!((dp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let sites = site_count_distribution(&probs).unwrap();
        prop_assert_eq!(sites.len(), l + 1);
    }
}

#[test]
fn identical_sites_collapse_to_binomial_per_subinterval() {
    // One subinterval: N = 1 iff any site fires.
    let d = exact_count_distribution(&vec![vec![0.2]; 5]).unwrap();
    assert!((d[1] - (1.0 - 0.8f64.powi(5))).abs() < 1e-15);
    assert!(d[2..].iter().all(|&x| x == 0.0));
}

#[test]
fn poisson_limit_improves_with_size() {
    let tv = |l, m| tv_distance_to_poisson(&exact_count_distribution(&uniform_site_probs(l, m, 2.0)).unwrap(), 2.0);
    let (small, mid, large) = (tv(4, 8), tv(8, 16), tv(32, 64));
    assert!(small > mid && mid > large, "{small} {mid} {large}");
}
