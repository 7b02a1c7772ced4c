//! Analytic fundamental Gaussian beam, separable in x and y.
//!
//! Convention `exp(+i k z - i omega t)`. Per axis with waist `w0`:
//! `u(x) = (2/pi)^(1/4) w^(-1/2) exp(-x^2/w^2) exp(i k x^2 / 2R) exp(-i psi/2)`
//! with `z_R = pi w0^2 / lambda`, `w = w0 sqrt(1 + (z/z_R)^2)`,
//! `R = z (1 + (z_R/z)^2)` and `psi = atan(z / z_R)`. `u` has unit norm on the
//! real line, so the sampled power is the fraction captured by the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{OpticsError, Result};
use crate::grid::{FieldGrid, GridSpec};

/// Minimum samples per waist.
pub const MIN_SAMPLES_PER_WAIST: f64 = 8.0;

pub fn rayleigh_range(waist: f64, wavelength: f64) -> f64 {
    PI * waist * waist / wavelength
}

pub fn beam_radius(waist: f64, wavelength: f64, z: f64) -> f64 {
    let zr = rayleigh_range(waist, wavelength);
    waist * (1.0 + (z / zr).powi(2)).sqrt()
}

fn axis_profile(waist: f64, wavelength: f64, z: f64, coords: impl Iterator<Item = f64>) -> Vec<Complex64> {
    let k = 2.0 * PI / wavelength;
    let zr = rayleigh_range(waist, wavelength);
    let w = beam_radius(waist, wavelength, z);
    let inv_r = if z == 0.0 { 0.0 } else { z / (z * z + zr * zr) };
    let gouy = (z / zr).atan();
    let norm = (2.0 / PI).powf(0.25) / w.sqrt();
    coords
        .map(|x| {
            let amp = norm * (-(x * x) / (w * w)).exp();
            Complex64::from_polar(amp, k * x * x * inv_r / 2.0 - gouy / 2.0)
        })
        .collect()
}

pub fn gaussian_field(
    waist_x: f64,
    waist_y: f64,
    wavelength: f64,
    z: f64,
    spec: GridSpec,
) -> Result<FieldGrid> {
    spec.validate()?;
    for (w, d) in [(waist_x, spec.dx), (waist_y, spec.dy)] {
        if !(w > 0.0) {
            return Err(OpticsError::InvalidParameter(format!("waist {w} must be positive")));
        }
        if w / d < MIN_SAMPLES_PER_WAIST {
            return Err(OpticsError::UnderResolved {
                waist: w,
                pitch: d,
                required_pitch: w / MIN_SAMPLES_PER_WAIST,
            });
        }
    }
    let mut field = FieldGrid::zeros(spec, z, wavelength)?;
    let ux = axis_profile(waist_x, wavelength, z, (0..spec.nx).map(|i| spec.x(i)));
    let uy = axis_profile(waist_y, wavelength, z, (0..spec.ny).map(|i| spec.y(i)));
    field
        .amplitude
        .par_chunks_mut(spec.nx)
        .zip(uy.par_iter())
        .for_each(|(row, &vy)| {
            for (a, &vx) in row.iter_mut().zip(&ux) {
                *a = vx * vy;
            }
        });
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waist_plane_is_real_and_normalized() {
        let f = gaussian_field(20e-6, 20e-6, 0.71e-6, 0.0, GridSpec::square(256, 1e-6)).unwrap();
        assert!((f.power() - 1.0).abs() < 1e-9);
        assert!(f.amplitude.iter().all(|a| a.im.abs() < 1e-15 && a.re >= 0.0));
        let peak = f.amplitude.iter().map(|a| a.re).fold(0.0, f64::max);
        assert_eq!(f.at(128, 128).re, peak);
    }

    #[test]
    fn under_resolution_reports_pitch() {
        let e = gaussian_field(4e-6, 50e-6, 0.71e-6, 0.0, GridSpec::square(64, 1e-6)).unwrap_err();
        assert_eq!(
            e,
            OpticsError::UnderResolved { waist: 4e-6, pitch: 1e-6, required_pitch: 5e-7 }
        );
    }
}
