//! Pixelated photodetector: expected counts per pixel.
//!
//! `<N_i(t)> = t * eta_amp * eta_det * W / (h c / lambda) * F_i + t * r_fp`
//! where `F_i` is the fraction of the detector-plane power falling on
//! pixel `i`, integrated by a Riemann sum over the grid samples it covers.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::constants::photon_energy;
use crate::error::{OpticsError, Result};
use crate::grid::FieldGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Pixel side, m.
    pub pixel_size: f64,
    pub nx_pixels: usize,
    pub ny_pixels: usize,
    /// Array centre in the plane, m.
    #[serde(default)]
    pub center: (f64, f64),
    pub eta_det: f64,
    /// `1 - p_TN`.
    #[serde(default = "one")]
    pub eta_amp: f64,
    /// False-positive rate per pixel, 1/s.
    #[serde(default)]
    pub fp_rate: f64,
    /// Source power, W.
    pub power_w: f64,
    pub wavelength: f64,
}

fn one() -> f64 {
    1.0
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OpticsError::InvalidParameter(m));
        for (name, p) in [("eta_det", self.eta_det), ("eta_amp", self.eta_amp)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !(self.fp_rate >= 0.0) {
            return bad(format!("fp_rate = {} must be non-negative", self.fp_rate));
        }
        if !(self.wavelength > 0.0) {
            return bad(format!("wavelength = {} must be positive", self.wavelength));
        }
        if !(self.power_w >= 0.0) {
            return bad(format!("power = {} must be non-negative", self.power_w));
        }
        if !(self.pixel_size > 0.0) || self.nx_pixels == 0 || self.ny_pixels == 0 {
            return bad("detector array is empty".into());
        }
        Ok(())
    }

    /// Detected photons per second for the full source power.
    pub fn photon_rate(&self) -> f64 {
        self.eta_amp * self.eta_det * self.power_w / photon_energy(self.wavelength)
    }
}

/// Row-major per-pixel values, `iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMap {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl PixelMap {
    pub fn scaled(&self, s: f64) -> PixelMap {
        PixelMap {
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Fraction of the plane's power on each pixel.
pub fn pixel_power_fractions(f: &FieldGrid, det: &DetectorParams) -> Result<PixelMap> {
    pixel_power_fractions_of(f, det, f.power())
}

/// Pixel power over `plane_power`, for grids that hold only part of the
/// plane's light.
pub fn pixel_power_fractions_of(f: &FieldGrid, det: &DetectorParams, plane_power: f64) -> Result<PixelMap> {
    det.validate()?;
    let spec = f.spec;
    let per_x = det.pixel_size / spec.dx;
    let per_y = det.pixel_size / spec.dy;
    let (sx, sy) = (per_x.round() as usize, per_y.round() as usize);
    if (per_x - sx as f64).abs() > 1e-9 || (per_y - sy as f64).abs() > 1e-9 || sx == 0 || sy == 0 {
        return Err(OpticsError::InvalidParameter(format!(
            "pixel size {} is not an integer multiple of the grid pitch",
            det.pixel_size
        )));
    }
    let x0 = spec.x_index(det.center.0 - det.nx_pixels as f64 * det.pixel_size / 2.0);
    let y0 = spec.y_index(det.center.1 - det.ny_pixels as f64 * det.pixel_size / 2.0);
    let x1 = x0 + (det.nx_pixels * sx) as i64;
    let y1 = y0 + (det.ny_pixels * sy) as i64;
    if x0 < 0 || y0 < 0 || x1 > spec.nx as i64 || y1 > spec.ny as i64 {
        return Err(OpticsError::DetectorOutsideGrid(format!(
            "samples x [{x0}, {x1}), y [{y0}, {y1}) on a {}x{} grid",
            spec.nx, spec.ny
        )));
    }
    let total = plane_power;
    let mut values = vec![0.0; det.nx_pixels * det.ny_pixels];
    if total > 0.0 {
        let da = spec.dx * spec.dy / total;
        for py in 0..det.ny_pixels {
            for px in 0..det.nx_pixels {
                let mut acc = 0.0;
                for iy in 0..sy {
                    let row = (y0 as usize + py * sy + iy) * spec.nx + x0 as usize + px * sx;
                    acc += f.amplitude[row..row + sx].iter().map(|a| a.norm_sqr()).sum::<f64>();
                }
                values[py * det.nx_pixels + px] = acc * da;
            }
        }
    }
    Ok(PixelMap {
        nx: det.nx_pixels,
        ny: det.ny_pixels,
        values,
    })
}

/// Expected counts per second on each pixel.
pub fn rate_map(f: &FieldGrid, det: &DetectorParams) -> Result<PixelMap> {
    rate_map_of(f, det, f.power())
}

pub fn rate_map_of(f: &FieldGrid, det: &DetectorParams, plane_power: f64) -> Result<PixelMap> {
    let frac = pixel_power_fractions_of(f, det, plane_power)?;
    let rate = det.photon_rate();
    Ok(PixelMap {
        nx: frac.nx,
        ny: frac.ny,
        values: frac.values.iter().map(|v| rate * v + det.fp_rate).collect(),
    })
}

/// Expected counts per pixel after `t` seconds.
pub fn expectation_map(f: &FieldGrid, det: &DetectorParams, t: f64) -> Result<PixelMap> {
    if !(t >= 0.0) {
        return Err(OpticsError::InvalidParameter(format!("time {t} must be non-negative")));
    }
    Ok(rate_map(f, det)?.scaled(t))
}
