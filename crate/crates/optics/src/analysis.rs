//! Measurements on sampled fields.

use crate::grid::FieldGrid;

/// Second-moment beam radius along x, `2 sqrt(<x^2>)` of the marginal
/// intensity (the 1/e^2 radius for a Gaussian).
pub fn second_moment_radius_x(f: &FieldGrid) -> f64 {
    let spec = f.spec;
    let (mut m0, mut m2) = (0.0, 0.0);
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            let i = f.at(ix, iy).norm_sqr();
            let x = spec.x(ix);
            m0 += i;
            m2 += i * x * x;
        }
    }
    2.0 * (m2 / m0).sqrt()
}

/// Intensity along the row through `y = 0`.
pub fn center_row_intensity(f: &FieldGrid) -> Vec<f64> {
    let iy = f.spec.ny / 2;
    (0..f.spec.nx).map(|ix| f.at(ix, iy).norm_sqr()).collect()
}

/// Fringe minima must fall below this fraction of the window maximum;
/// shallow ripples from the aperture edges are skipped.
pub const MINIMUM_DEPTH: f64 = 0.2;

/// Deep local minima (fractional sample index, parabolic refinement)
/// within `half_window` samples of `center`.
pub fn minima_near(profile: &[f64], center: usize, half_window: usize) -> Vec<f64> {
    let lo = center.saturating_sub(half_window).max(1);
    let hi = (center + half_window).min(profile.len() - 2);
    let top = profile[lo..=hi].iter().copied().fold(0.0, f64::max);
    (lo..=hi)
        .filter(|&i| profile[i] < profile[i - 1] && profile[i] <= profile[i + 1])
        .filter(|&i| profile[i] <= MINIMUM_DEPTH * top)
        .map(|i| {
            let (a, b, c) = (profile[i - 1], profile[i], profile[i + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            i as f64 + shift
        })
        .collect()
}

/// Fringe period from the mean spacing of the minima within
/// `half_window` samples of the centre, in metres.
pub fn fringe_period(profile: &[f64], pitch: f64, half_window: usize) -> Option<f64> {
    let minima = minima_near(profile, profile.len() / 2, half_window);
    if minima.len() < 2 {
        return None;
    }
    let span = minima.last()? - minima.first()?;
    Some(span / (minima.len() - 1) as f64 * pitch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_fringes() {
        let period = 37.3;
        let p: Vec<f64> = (0..512)
            .map(|i| 1.0 + (2.0 * std::f64::consts::PI * (i as f64 - 256.0) / period).cos())
            .collect();
        let got = fringe_period(&p, 1.0, 100).unwrap();
        assert!((got - period).abs() < 0.05, "{got}");
    }
}
