//! Gaussian beam through two square apertures onto a pixel array.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analysis::{center_row_intensity, fringe_period};
use crate::detector::{rate_map_of, DetectorParams, PixelMap};
use crate::error::{OpticsError, Result};
use crate::gaussian::gaussian_field;
use crate::grid::{FieldGrid, GridSpec};
use crate::mask::{apply_mask, Mask};
use crate::propagate::{propagate_band_limited, propagate_with_report, PropagationReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DoubleSlitConfig {
    pub wavelength: f64,
    pub waist_x: f64,
    pub waist_y: f64,
    /// Slit plane, measured from the waist, m.
    pub z_slit: f64,
    pub z_detector: f64,
    pub slit_size: f64,
    /// Centre-to-centre.
    pub slit_separation: f64,
    pub grid: GridSpec,
    /// Zero padding applied before propagation.
    pub pad_factor: usize,
    /// Drop components that would wrap around the padded window.
    #[serde(default = "yes")]
    pub band_limit: bool,
    pub detector: DetectorParams,
}

fn yes() -> bool {
    true
}

impl Default for DoubleSlitConfig {
    fn default() -> Self {
        let wavelength = 0.710e-6;
        Self {
            wavelength,
            waist_x: 50e-6,
            waist_y: 50e-6,
            z_slit: 50e-3,
            z_detector: 60e-3,
            slit_size: 20e-6,
            slit_separation: 100e-6,
            grid: GridSpec::square(1024, 0.5e-6),
            pad_factor: 2,
            band_limit: true,
            detector: DetectorParams {
                pixel_size: 5e-6,
                nx_pixels: 50,
                ny_pixels: 50,
                center: (0.0, 0.0),
                eta_det: 0.1,
                eta_amp: 1.0,
                fp_rate: 0.0,
                power_w: 1e-14,
                wavelength,
            },
        }
    }
}

impl DoubleSlitConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.detector.validate()?;
        if self.detector.wavelength != self.wavelength {
            return Err(OpticsError::InvalidParameter(
                "detector wavelength differs from source wavelength".into(),
            ));
        }
        if !(self.z_detector >= self.z_slit) {
            return Err(OpticsError::InvalidParameter("detector must lie beyond the slits".into()));
        }
        if !(self.slit_size > 0.0 && self.slit_separation > self.slit_size) {
            return Err(OpticsError::InvalidParameter("slits must be positive and disjoint".into()));
        }
        Ok(())
    }

    /// Far-field two-slit fringe period `lambda dz / d`.
    pub fn predicted_fringe_period(&self) -> f64 {
        self.wavelength * (self.z_detector - self.z_slit) / self.slit_separation
    }
}

#[derive(Clone, Debug)]
pub struct DoubleSlitResult {
    /// Field just before the mask.
    pub incident: FieldGrid,
    pub transmitted: FieldGrid,
    /// Detector-plane field cropped back to the unpadded grid.
    pub detector_field: FieldGrid,
    /// Power after the mask over power incident on the grid.
    pub transmitted_fraction: f64,
    pub propagation: PropagationReport,
    /// Expected counts per second per pixel, with `W` the power passed by
    /// the slits.
    pub rates: PixelMap,
    pub fringe_period: Option<f64>,
}

pub fn run_double_slit(cfg: &DoubleSlitConfig) -> Result<DoubleSlitResult> {
    cfg.validate()?;
    let incident = gaussian_field(cfg.waist_x, cfg.waist_y, cfg.wavelength, cfg.z_slit, cfg.grid)?;
    let mask = Mask::double_slit(cfg.slit_size, cfg.slit_separation);
    let transmitted = apply_mask(&incident, &mask);
    let transmitted_fraction = transmitted.power() / incident.power();
    let padded = transmitted.padded(cfg.pad_factor)?;
    let dz = cfg.z_detector - cfg.z_slit;
    let (out, propagation) = if cfg.band_limit {
        propagate_band_limited(&padded, dz)?
    } else {
        propagate_with_report(&padded, dz)?
    };
    log::debug!("propagation: {propagation:?}");
    let detector_field = out.cropped(cfg.grid.nx, cfg.grid.ny)?;
    // The plane holds everything the slits pass, including light the band
    // limit sent out of the window.
    let rates = rate_map_of(&detector_field, &cfg.detector, transmitted.power())?;
    // Search two predicted periods either side of the axis.
    let window = (2.0 * cfg.predicted_fringe_period() / cfg.grid.dx).ceil() as usize;
    let fringe_period = fringe_period(&center_row_intensity(&detector_field), cfg.grid.dx, window);
    Ok(DoubleSlitResult {
        incident,
        transmitted,
        detector_field,
        transmitted_fraction,
        propagation,
        rates,
        fringe_period,
    })
}
