//! Sampled scalar fields on a regular transverse grid.
//!
//! Sample `(ix, iy)` sits at `x = (ix - nx/2) dx`, `y = (iy - ny/2) dy` and is
//! stored at `iy * nx + ix`. Amplitudes are normalized so that
//! `sum |E|^2 dx dy` is the fraction of the source power in the plane.

use num_complex::Complex64;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{OpticsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn square(n: usize, pitch: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            dx: pitch,
            dy: pitch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx", self.nx), ("ny", self.ny)] {
            if n < 2 || !n.is_power_of_two() {
                return Err(OpticsError::InvalidGrid(format!(
                    "{name} = {n} is not a power of two >= 2"
                )));
            }
        }
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(OpticsError::InvalidGrid(format!(
                "pitch ({}, {}) must be positive",
                self.dx, self.dy
            )));
        }
        Ok(())
    }

    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.ny / 2) as f64) * self.dy
    }

    /// Nearest sample index to coordinate `x` (may be out of range).
    pub fn x_index(&self, x: f64) -> i64 {
        (x / self.dx).round() as i64 + (self.nx / 2) as i64
    }

    pub fn y_index(&self, y: f64) -> i64 {
        (y / self.dy).round() as i64 + (self.ny / 2) as i64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    /// Plane coordinate, m.
    pub z: f64,
    pub wavelength: f64,
    pub amplitude: Vec<Complex64>,
}

impl FieldGrid {
    pub fn zeros(spec: GridSpec, z: f64, wavelength: f64) -> Result<Self> {
        spec.validate()?;
        if !(wavelength > 0.0) {
            return Err(OpticsError::InvalidParameter(format!(
                "wavelength {wavelength} must be positive"
            )));
        }
        Ok(Self {
            spec,
            z,
            wavelength,
            amplitude: vec![Complex64::new(0.0, 0.0); spec.len()],
        })
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.amplitude[iy * self.spec.nx + ix]
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `sum |E|^2 dx dy`.
    pub fn power(&self) -> f64 {
        self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spec.dx * self.spec.dy
    }

    /// Embeds the field in a grid `factor` times larger, zero-filled and centered.
    pub fn padded(&self, factor: usize) -> Result<FieldGrid> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(OpticsError::InvalidGrid(format!(
                "padding factor {factor} is not a power of two"
            )));
        }
        let spec = GridSpec {
            nx: self.spec.nx * factor,
            ny: self.spec.ny * factor,
            ..self.spec
        };
        let mut out = FieldGrid::zeros(spec, self.z, self.wavelength)?;
        let (ox, oy) = ((spec.nx - self.spec.nx) / 2, (spec.ny - self.spec.ny) / 2);
        for iy in 0..self.spec.ny {
            let src = &self.amplitude[iy * self.spec.nx..(iy + 1) * self.spec.nx];
            let start = (iy + oy) * spec.nx + ox;
            out.amplitude[start..start + self.spec.nx].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Central `nx x ny` window.
    pub fn cropped(&self, nx: usize, ny: usize) -> Result<FieldGrid> {
        if nx > self.spec.nx || ny > self.spec.ny {
            return Err(OpticsError::InvalidGrid(format!(
                "crop {nx}x{ny} larger than grid {}x{}",
                self.spec.nx, self.spec.ny
            )));
        }
        let spec = GridSpec { nx, ny, ..self.spec };
        let mut out = FieldGrid::zeros(spec, self.z, self.wavelength)?;
        let (ox, oy) = ((self.spec.nx - nx) / 2, (self.spec.ny - ny) / 2);
        for iy in 0..ny {
            let start = (iy + oy) * self.spec.nx + ox;
            out.amplitude[iy * nx..(iy + 1) * nx]
                .copy_from_slice(&self.amplitude[start..start + nx]);
        }
        Ok(out)
    }

    /// Fraction of the power outside the central window of half the grid
    /// size in each dimension.
    pub fn border_fraction(&self) -> f64 {
        let total = self.power();
        if total == 0.0 {
            return 0.0;
        }
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let mut inner = 0.0;
        for iy in ny / 4..ny - ny / 4 {
            for ix in nx / 4..nx - nx / 4 {
                inner += self.at(ix, iy).norm_sqr();
            }
        }
        1.0 - inner * self.spec.dx * self.spec.dy / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pad_then_crop_roundtrip() {
        let spec = GridSpec::square(8, 1e-6);
        let mut f = FieldGrid::zeros(spec, 0.0, 1e-6).unwrap();
        for (i, a) in f.amplitude.iter_mut().enumerate() {
            *a = Complex64::new(i as f64, -(i as f64));
        }
        let p = f.padded(2).unwrap();
        assert_eq!(p.spec.nx, 16);
        assert_eq!(p.at(8, 8), f.at(4, 4));
        assert_eq!(p.power(), f.power());
        assert_eq!(p.cropped(8, 8).unwrap(), f);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(GridSpec::square(12, 1e-6).validate().is_err());
        assert!(GridSpec::square(16, 0.0).validate().is_err());
    }

    #[test]
    fn coordinates_are_centered() {
        let s = GridSpec::square(16, 0.5);
        assert_eq!(s.x(8), 0.0);
        assert_eq!(s.x_index(-4.0), 0);
        assert_eq!(s.y(0), -4.0);
    }
}
