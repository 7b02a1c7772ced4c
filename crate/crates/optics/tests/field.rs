use chaintrial_optics::analysis::second_moment_radius_x;
use chaintrial_optics::gaussian::{beam_radius, gaussian_field};
use chaintrial_optics::mask::{apply_mask, Mask, Rect};
use chaintrial_optics::propagate::{propagate_angular_spectrum, propagate_band_limited, propagate_with_report};
use chaintrial_optics::{FieldGrid, GridSpec, OpticsError};
use num_complex::Complex64;
use proptest::prelude::*;

const LAMBDA: f64 = 0.710e-6;

fn max_diff(a: &FieldGrid, b: &FieldGrid) -> f64 {
    a.amplitude
        .iter()
        .zip(&b.amplitude)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

// Simpson integral of exp(-2 x^2 / w^2) over [a, b], divided by its
// integral over the real line.
fn gaussian_share(a: f64, b: f64, w: f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    let f = |x: f64| (-2.0 * x * x / (w * w)).exp();
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 / (w * (std::f64::consts::PI / 2.0).sqrt())
}

#[test]
fn waist_plane_is_real_centered_and_normalized() {
    let f = gaussian_field(50e-6, 50e-6, LAMBDA, 0.0, GridSpec::square(512, 1e-6)).unwrap();
    assert!((f.power() - 1.0).abs() < 1e-9, "{}", f.power());
    assert!(f.amplitude.iter().all(|a| a.im.abs() < 1e-15));
    let peak = (0..f.amplitude.len())
        .max_by(|&i, &j| f.amplitude[i].norm().total_cmp(&f.amplitude[j].norm()))
        .unwrap();
    assert_eq!(peak, 256 * 512 + 256);
}

#[test]
fn width_after_fifty_millimetres_matches_closed_form() {
    let f = gaussian_field(50e-6, 50e-6, LAMBDA, 50e-3, GridSpec::square(1024, 2e-6)).unwrap();
    let expect = beam_radius(50e-6, LAMBDA, 50e-3);
    let got = second_moment_radius_x(&f);
    assert!((got / expect - 1.0).abs() < 5e-3, "{got} vs {expect}");
}

#[test]
fn elliptical_beam_is_separable() {
    let spec = GridSpec::square(256, 1e-6);
    let f = gaussian_field(30e-6, 15e-6, LAMBDA, 4e-3, spec).unwrap();
    let (cx, cy) = (128, 128);
    let c = f.at(cx, cy);
    for (ix, iy) in [(100, 140), (150, 90), (128, 60), (30, 200)] {
        let lhs = f.at(ix, iy) * c;
        let rhs = f.at(ix, cy) * f.at(cx, iy);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1e-300) + 1e-18);
    }
}

#[test]
fn under_resolved_beam_names_required_pitch() {
    match gaussian_field(5e-6, 5e-6, LAMBDA, 0.0, GridSpec::square(64, 1e-6)) {
        Err(OpticsError::UnderResolved { required_pitch, .. }) => {
            assert!((required_pitch - 5e-6 / 8.0).abs() < 1e-18)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn open_and_opaque_masks() {
    let f = gaussian_field(20e-6, 20e-6, LAMBDA, 1e-3, GridSpec::square(128, 1e-6)).unwrap();
    assert_eq!(apply_mask(&f, &Mask::Open), f);
    let z = apply_mask(&f, &Mask::Opaque);
    assert_eq!(z.power(), 0.0);
}

#[test]
fn double_slit_transmission_matches_integral() {
    let z = 50e-3;
    let f = gaussian_field(50e-6, 50e-6, LAMBDA, z, GridSpec::square(1024, 0.5e-6)).unwrap();
    let t = apply_mask(&f, &Mask::double_slit(20e-6, 100e-6));
    let w = beam_radius(50e-6, LAMBDA, z);
    let one = gaussian_share(40e-6, 60e-6, w) * gaussian_share(-10e-6, 10e-6, w);
    let expect = 2.0 * one;
    assert!(t.power() < f.power());
    assert!((t.power() / expect - 1.0).abs() < 1e-3, "{} vs {expect}", t.power());
}

#[test]
fn reference_slit_field_power_is_conserved_without_band_limit() {
    let f = gaussian_field(50e-6, 50e-6, LAMBDA, 50e-3, GridSpec::square(1024, 0.5e-6)).unwrap();
    let t = apply_mask(&f, &Mask::double_slit(20e-6, 100e-6)).padded(2).unwrap();
    let (_, rep) = propagate_with_report(&t, 10e-3).unwrap();
    assert!((rep.power_out - rep.power_in).abs() < 1e-10 * rep.power_in, "{rep:?}");
    assert_eq!(rep.band_limit_loss, 0.0);
    assert!(rep.propagating_power_defect() < 1e-10);
}

#[test]
fn band_limit_loss_is_accounted() {
    let f = gaussian_field(50e-6, 50e-6, LAMBDA, 50e-3, GridSpec::square(512, 0.5e-6)).unwrap();
    let t = apply_mask(&f, &Mask::double_slit(20e-6, 100e-6)).padded(2).unwrap();
    let (_, rep) = propagate_band_limited(&t, 10e-3).unwrap();
    assert!(rep.band_limit_loss > 0.0);
    assert!(rep.propagating_power_defect() < 1e-10, "{rep:?}");
}

fn smooth_field(waist: f64, z0: f64) -> FieldGrid {
    gaussian_field(waist, waist * 0.8, LAMBDA, z0, GridSpec::square(256, 0.5e-6)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_for_band_limited_fields(waist in 8e-6..14e-6f64, z0 in -1e-3..1e-3f64, dz in -3e-4..3e-4f64) {
        let f = smooth_field(waist, z0);
        let (g, rep) = propagate_with_report(&f, dz).unwrap();
        prop_assert!(rep.evanescent_loss < 1e-14);
        prop_assert!((g.power() - f.power()).abs() < 1e-10 * f.power());
    }

    #[test]
    fn forward_then_back_restores(waist in 8e-6..14e-6f64, dz in -3e-4..3e-4f64) {
        let f = smooth_field(waist, 0.0);
        let back = propagate_angular_spectrum(&propagate_angular_spectrum(&f, dz).unwrap(), -dz).unwrap();
        prop_assert!(max_diff(&f, &back) < 1e-8 * f.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max));
    }

    #[test]
    fn propagation_is_linear(wa in 8e-6..14e-6f64, wb in 8e-6..14e-6f64, re in -2.0..2.0f64, im in -2.0..2.0f64, dz in 0.0..3e-4f64) {
        let a = smooth_field(wa, 0.0);
        let b = smooth_field(wb, 1e-4);
        let s = Complex64::new(re, im);
        let mut combo = a.clone();
        for (x, y) in combo.amplitude.iter_mut().zip(&b.amplitude) {
            *x = *x * s + y;
        }
        let pa = propagate_angular_spectrum(&a, dz).unwrap();
        let pb = propagate_angular_spectrum(&b, dz).unwrap();
        let pc = propagate_angular_spectrum(&combo, dz).unwrap();
        let mut expect = pa.clone();
        for (x, y) in expect.amplitude.iter_mut().zip(&pb.amplitude) {
            *x = *x * s + y;
        }
        prop_assert!(max_diff(&pc, &expect) < 1e-9);
    }

    #[test]
    fn masks_never_add_power(cx in -30e-6..30e-6f64, w in 1e-6..40e-6f64) {
        let f = smooth_field(10e-6, 0.0);
        let m = Mask::Apertures { rects: vec![Rect { cx, cy: 0.0, wx: w, wy: w }] };
        prop_assert!(apply_mask(&f, &m).power() < f.power());
    }
}
