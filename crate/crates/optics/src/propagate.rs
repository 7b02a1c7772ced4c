//! Angular-spectrum propagation on a periodic grid.
//!
//! The field is transformed with a 2-D FFT, each plane-wave component is
//! multiplied by `exp(i k_z dz)` with `k_z = sqrt(k^2 - k_x^2 - k_y^2)`, and
//! transformed back. Components with `k_x^2 + k_y^2 > k^2` are evanescent
//! and decay as `exp(-kappa |dz|)`. The grid is treated as periodic; pad
//! explicitly with [`FieldGrid::padded`] to keep light away from the edges.
//!
//! Steep components travel `dz tan(theta)` sideways and can wrap around the
//! window many times over a long distance. The band-limited variant drops
//! spatial frequencies above `1 / (lambda sqrt((2 dz / W)^2 + 1))` per axis,
//! `W` the window width; their removed power is reported, not hidden.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::Result;
use crate::grid::FieldGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PropagationReport {
    pub power_in: f64,
    pub power_out: f64,
    /// Power removed by evanescent attenuation.
    pub evanescent_loss: f64,
    /// Power removed by the band limit (zero when it is off).
    pub band_limit_loss: f64,
    /// Output power fraction outside the central half-size window.
    pub border_fraction: f64,
}

impl PropagationReport {
    /// `|P_out - (P_in - P_evanescent - P_band)| / P_in`; exact conservation of the
    /// propagating part gives zero.
    pub fn propagating_power_defect(&self) -> f64 {
        if self.power_in == 0.0 {
            return (self.power_out - self.power_in).abs();
        }
        (self.power_out - (self.power_in - self.evanescent_loss - self.band_limit_loss)).abs() / self.power_in
    }
}

fn fft_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transpose(src: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(ny).enumerate().for_each(|(ix, col)| {
        for (iy, v) in col.iter_mut().enumerate() {
            *v = src[iy * nx + ix];
        }
    });
    out
}

/// Unnormalized forward (`inverse == false`) or backward 2-D DFT, in place.
pub fn fft2(data: &mut Vec<Complex64>, nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (fx, fy) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    fft_rows(data, nx, &fx);
    let mut t = transpose(data, nx, ny);
    fft_rows(&mut t, ny, &fy);
    *data = transpose(&t, ny, nx);
}

fn spatial_frequency(j: usize, n: usize, d: f64) -> f64 {
    let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
    j / (n as f64 * d)
}

pub fn propagate_angular_spectrum(f: &FieldGrid, dz: f64) -> Result<FieldGrid> {
    Ok(propagate_with_report(f, dz)?.0)
}

pub fn propagate_with_report(f: &FieldGrid, dz: f64) -> Result<(FieldGrid, PropagationReport)> {
    propagate_impl(f, dz, false)
}

/// Frequency cutoff beyond which a component's lateral shift over `dz`
/// exceeds half the window of `n` samples at pitch `d`.
pub fn band_limit(n: usize, d: f64, wavelength: f64, dz: f64) -> f64 {
    let du = 1.0 / (n as f64 * d);
    1.0 / (wavelength * ((2.0 * du * dz).powi(2) + 1.0).sqrt())
}

pub fn propagate_band_limited(f: &FieldGrid, dz: f64) -> Result<(FieldGrid, PropagationReport)> {
    propagate_impl(f, dz, true)
}

fn propagate_impl(f: &FieldGrid, dz: f64, limit: bool) -> Result<(FieldGrid, PropagationReport)> {
    let spec = f.spec;
    spec.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let power_in = f.power();
    let k = 2.0 * PI / f.wavelength;
    let k2 = k * k;
    let mut data = f.amplitude.clone();
    fft2(&mut data, nx, ny, false);

    let (ux, uy) = if limit {
        (
            band_limit(nx, spec.dx, f.wavelength, dz),
            band_limit(ny, spec.dy, f.wavelength, dz),
        )
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let fx: Vec<f64> = (0..nx).map(|j| spatial_frequency(j, nx, spec.dx)).collect();
    let scale = spec.dx * spec.dy / (nx * ny) as f64;
    let (evanescent_loss, band_limit_loss) = data
        .par_chunks_mut(nx)
        .enumerate()
        .map(|(iy, row)| {
            let fy = spatial_frequency(iy, ny, spec.dy);
            let ky2 = (2.0 * PI * fy).powi(2);
            let (mut lost, mut cut) = (0.0, 0.0);
            for (a, &fx) in row.iter_mut().zip(&fx) {
                if fx.abs() > ux || fy.abs() > uy {
                    cut += a.norm_sqr();
                    *a = Complex64::new(0.0, 0.0);
                    continue;
                }
                let arg = k2 - (2.0 * PI * fx).powi(2) - ky2;
                let h = if arg >= 0.0 {
                    Complex64::from_polar(1.0, arg.sqrt() * dz)
                } else {
                    let g = (-(-arg).sqrt() * dz.abs()).exp();
                    lost += a.norm_sqr() * (1.0 - g * g);
                    Complex64::new(g, 0.0)
                };
                *a *= h;
            }
            (lost * scale, cut * scale)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    fft2(&mut data, nx, ny, true);
    let norm = 1.0 / (nx * ny) as f64;
    data.par_iter_mut().for_each(|a| *a *= norm);
    let out = FieldGrid {
        spec,
        z: f.z + dz,
        wavelength: f.wavelength,
        amplitude: data,
    };
    let report = PropagationReport {
        power_in,
        power_out: out.power(),
        evanescent_loss,
        band_limit_loss,
        border_fraction: out.border_fraction(),
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn zero_distance_is_identity() {
        let spec = GridSpec::square(64, 1e-6);
        let mut f = FieldGrid::zeros(spec, 0.0, 0.7e-6).unwrap();
        for (i, a) in f.amplitude.iter_mut().enumerate() {
            *a = Complex64::new((i % 7) as f64 * 0.1, (i % 5) as f64 * 0.2);
        }
        let g = propagate_angular_spectrum(&f, 0.0).unwrap();
        let diff = f
            .amplitude
            .iter()
            .zip(&g.amplitude)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn plane_wave_gets_pure_phase() {
        let spec = GridSpec::square(32, 1e-6);
        let mut f = FieldGrid::zeros(spec, 0.0, 0.5e-6).unwrap();
        // kx at FFT bin 3.
        for iy in 0..32 {
            for ix in 0..32 {
                f.amplitude[iy * 32 + ix] = Complex64::from_polar(1.0, 2.0 * PI * 3.0 * ix as f64 / 32.0);
            }
        }
        let dz = 3e-6;
        let (g, rep) = propagate_with_report(&f, dz).unwrap();
        let k = 2.0 * PI / 0.5e-6;
        let kx = 2.0 * PI * 3.0 / 32e-6;
        let phase = Complex64::from_polar(1.0, (k * k - kx * kx).sqrt() * dz);
        for (a, b) in f.amplitude.iter().zip(&g.amplitude) {
            assert!((a * phase - b).norm() < 1e-10);
        }
        assert!((rep.power_out - rep.power_in).abs() < 1e-10 * rep.power_in);
        assert_eq!(rep.evanescent_loss, 0.0);
    }
}
