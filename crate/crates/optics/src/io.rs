//! File outputs: raw field dumps, 16-bit heatmaps and count tables.
//!
//! Heatmaps use a fixed linear grayscale: 0 maps to black and the map's
//! maximum (or an explicit `full_scale`) to 65535.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, ImageFormat, Luma};
use serde::Serialize;

use crate::counts::CountsFrame;
use crate::detector::PixelMap;
use crate::error::{OpticsError, Result};
use crate::grid::FieldGrid;

#[derive(Clone, Debug, Serialize)]
pub struct FieldSidecar {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub z: f64,
    pub wavelength: f64,
    pub dtype: &'static str,
    pub layout: &'static str,
}

/// Writes `<stem>.bin` (little-endian f32 re/im pairs, row-major) and
/// `<stem>.json`. Returns both paths.
pub fn write_field_dump(dir: &Path, stem: &str, f: &FieldGrid) -> Result<(PathBuf, PathBuf)> {
    let bin = dir.join(format!("{stem}.bin"));
    let json = dir.join(format!("{stem}.json"));
    let mut w = BufWriter::new(File::create(&bin)?);
    for a in &f.amplitude {
        w.write_all(&(a.re as f32).to_le_bytes())?;
        w.write_all(&(a.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    let side = FieldSidecar {
        nx: f.spec.nx,
        ny: f.spec.ny,
        dx: f.spec.dx,
        dy: f.spec.dy,
        z: f.z,
        wavelength: f.wavelength,
        dtype: "complex64 little-endian (f32 re, f32 im)",
        layout: "row-major, index iy*nx+ix, x = (ix - nx/2) dx",
    };
    let text = serde_json::to_string_pretty(&side).map_err(|e| OpticsError::Io(e.to_string()))?;
    std::fs::write(&json, text)?;
    Ok((bin, json))
}

fn to_gray16(values: &[f64], nx: usize, ny: usize, full_scale: Option<f64>) -> Result<ImageBuffer<Luma<u16>, Vec<u16>>> {
    if values.len() != nx * ny {
        return Err(OpticsError::InvalidParameter(format!(
            "{} values for a {nx}x{ny} image",
            values.len()
        )));
    }
    let top = full_scale.unwrap_or_else(|| values.iter().copied().fold(0.0, f64::max));
    let px: Vec<u16> = values
        .iter()
        .map(|&v| {
            if top > 0.0 {
                (v / top * 65535.0).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    ImageBuffer::from_raw(nx as u32, ny as u32, px)
        .ok_or_else(|| OpticsError::InvalidParameter("image buffer size".into()))
}

/// Writes `<stem>.pgm` and `<stem>.png`. Row `iy = 0` is the top row.
pub fn write_heatmap(dir: &Path, stem: &str, values: &[f64], nx: usize, ny: usize, full_scale: Option<f64>) -> Result<()> {
    let img = to_gray16(values, nx, ny, full_scale)?;
    // Binary 16-bit PGM: samples are big-endian.
    let mut pgm = BufWriter::new(File::create(dir.join(format!("{stem}.pgm")))?);
    write!(pgm, "P5\n{nx} {ny}\n65535\n")?;
    for p in img.pixels() {
        pgm.write_all(&p.0[0].to_be_bytes())?;
    }
    pgm.flush()?;
    img.save_with_format(dir.join(format!("{stem}.png")), ImageFormat::Png)
        .map_err(|e| OpticsError::Io(e.to_string()))
}

pub fn write_pixel_map_heatmap(dir: &Path, stem: &str, m: &PixelMap, full_scale: Option<f64>) -> Result<()> {
    write_heatmap(dir, stem, &m.values, m.nx, m.ny, full_scale)
}

/// One row per pixel: `x_index,y_index,count`.
pub fn write_counts_csv<W: Write>(w: W, frame: &CountsFrame) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| OpticsError::Io(e.to_string());
    out.write_record(["x_index", "y_index", "count"]).map_err(err)?;
    for iy in 0..frame.ny {
        for ix in 0..frame.nx {
            out.write_record([
                ix.to_string(),
                iy.to_string(),
                frame.counts[iy * frame.nx + ix].to_string(),
            ])
            .map_err(err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Same layout as [`write_counts_csv`] with real-valued means.
pub fn write_map_csv<W: Write>(w: W, m: &PixelMap) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| OpticsError::Io(e.to_string());
    out.write_record(["x_index", "y_index", "mean"]).map_err(err)?;
    for iy in 0..m.ny {
        for ix in 0..m.nx {
            out.write_record([ix.to_string(), iy.to_string(), format!("{:.17e}", m.values[iy * m.nx + ix])])
                .map_err(err)?;
        }
    }
    out.flush()?;
    Ok(())
}
