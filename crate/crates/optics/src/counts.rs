//! Poisson photon counts per pixel.
//!
//! Pixel `p` of trial `j` draws from its own stream, so counts do not depend
//! on thread count or pixel evaluation order.

use chaintrial_core::rng::{domain, substream};
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::PixelMap;
use crate::error::{OpticsError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountsFrame {
    /// Exposure time, s.
    pub t: f64,
    pub nx: usize,
    pub ny: usize,
    pub counts: Vec<u64>,
    pub seed: u64,
    pub trial: u64,
}

impl CountsFrame {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn pixel_rng(seed: u64, trial: u64, pixel: usize) -> ChaCha8Rng {
    substream(seed, domain::PIXELS, (trial << 32) | pixel as u64)
}

fn draw(mean: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean)
        .map_err(|e| OpticsError::InvalidParameter(format!("Poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

fn check_means(m: &PixelMap) -> Result<()> {
    match m.values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        Some(v) => Err(OpticsError::InvalidParameter(format!("mean {v} must be finite and >= 0"))),
        None => Ok(()),
    }
}

/// One independent Poisson draw per pixel.
pub fn sample_counts(means: &PixelMap, t: f64, seed: u64, trial: u64) -> Result<CountsFrame> {
    check_means(means)?;
    let counts = means
        .values
        .par_iter()
        .enumerate()
        .map(|(p, &m)| draw(m, &mut pixel_rng(seed, trial, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CountsFrame {
        t,
        nx: means.nx,
        ny: means.ny,
        counts,
        seed,
        trial,
    })
}

/// Cumulative frames at increasing times from per-second rates: each frame
/// adds a Poisson increment over the elapsed interval.
pub fn cumulative_frames(rates: &PixelMap, times: &[f64], seed: u64, trial: u64) -> Result<Vec<CountsFrame>> {
    check_means(rates)?;
    let mut last = 0.0;
    for &t in times {
        if !(t >= last) {
            return Err(OpticsError::InvalidParameter(
                "frame times must be non-negative and non-decreasing".into(),
            ));
        }
        last = t;
    }
    let per_pixel: Vec<Vec<u64>> = rates
        .values
        .par_iter()
        .enumerate()
        .map(|(p, &r)| {
            let mut rng = pixel_rng(seed, trial, p);
            let mut acc = 0u64;
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    acc += draw(r * (t - prev), &mut rng)?;
                    prev = t;
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| CountsFrame {
            t,
            nx: rates.nx,
            ny: rates.ny,
            counts: per_pixel.iter().map(|c| c[k]).collect(),
            seed,
            trial,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_means_give_zero_counts() {
        let m = PixelMap { nx: 3, ny: 2, values: vec![0.0; 6] };
        assert!(sample_counts(&m, 1.0, 1, 0).unwrap().counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn frames_are_monotone() {
        let m = PixelMap { nx: 4, ny: 4, values: (0..16).map(|i| i as f64 * 10.0).collect() };
        let f = cumulative_frames(&m, &[0.1, 0.2, 0.4], 3, 0).unwrap();
        for w in f.windows(2) {
            assert!(w[0].counts.iter().zip(&w[1].counts).all(|(a, b)| a <= b));
        }
        assert!(sample_counts(&PixelMap { nx: 1, ny: 1, values: vec![-1.0] }, 0.0, 0, 0).is_err());
    }
}
