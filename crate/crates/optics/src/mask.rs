//! Binary transmittance masks.

use serde::{Deserialize, Serialize};

use crate::grid::{FieldGrid, GridSpec};

/// Axis-aligned rectangle, centre and full widths in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub wx: f64,
    pub wy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mask {
    Open,
    Opaque,
    /// Transmits inside any of the rectangles.
    Apertures { rects: Vec<Rect> },
}

impl Mask {
    /// Two square apertures of side `size` centred at `x = ±separation/2`.
    pub fn double_slit(size: f64, separation: f64) -> Self {
        let r = |cx| Rect {
            cx,
            cy: 0.0,
            wx: size,
            wy: size,
        };
        Mask::Apertures {
            rects: vec![r(-separation / 2.0), r(separation / 2.0)],
        }
    }

    /// Transmittance per sample. Rectangle edges are rounded to sample
    /// indices: `[round(lo/dx), round(hi/dx))` relative to the centre.
    pub fn rasterize(&self, spec: &GridSpec) -> Vec<bool> {
        match self {
            Mask::Open => vec![true; spec.len()],
            Mask::Opaque => vec![false; spec.len()],
            Mask::Apertures { rects } => {
                let mut m = vec![false; spec.len()];
                for r in rects {
                    let clamp = |i: i64, n: usize| i.clamp(0, n as i64) as usize;
                    let x0 = clamp(spec.x_index(r.cx - r.wx / 2.0), spec.nx);
                    let x1 = clamp(spec.x_index(r.cx + r.wx / 2.0), spec.nx);
                    let y0 = clamp(spec.y_index(r.cy - r.wy / 2.0), spec.ny);
                    let y1 = clamp(spec.y_index(r.cy + r.wy / 2.0), spec.ny);
                    for iy in y0..y1 {
                        m[iy * spec.nx + x0..iy * spec.nx + x1].fill(true);
                    }
                }
                m
            }
        }
    }
}

pub fn apply_mask(f: &FieldGrid, mask: &Mask) -> FieldGrid {
    let t = mask.rasterize(&f.spec);
    let mut out = f.clone();
    for (a, &pass) in out.amplitude.iter_mut().zip(&t) {
        if !pass {
            *a = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slit_rasterizes_to_whole_samples() {
        let spec = GridSpec::square(1024, 0.5e-6);
        let m = Mask::double_slit(20e-6, 100e-6).rasterize(&spec);
        assert_eq!(m.iter().filter(|&&b| b).count(), 2 * 40 * 40);
        assert!(m[512 * 1024 + 512 - 100]);
        assert!(!m[512 * 1024 + 512]);
    }
}
