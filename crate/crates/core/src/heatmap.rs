//! Grayscale SA heatmaps. Only sampled pixels carry a value; the rest render
//! black.

use thiserror::Error;

use crate::io::pgm::encode_pgm;
use crate::types::{ClassMask, PixelSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatmapError {
    #[error("invalid range: lo {lo} must be finite and below hi {hi}")]
    BadRange { lo: f64, hi: f64 },
    #[error("non-finite SA value at ({x}, {y})")]
    NonFinite { x: u32, y: u32 },
    #[error("pixel ({x}, {y}) outside {width}x{height} grid")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaGrid {
    width: u32,
    height: u32,
    values: Vec<Option<f64>>,
}

impl SaGrid {
    pub fn new(width: u32, height: u32) -> Self {
        SaGrid { width, height, values: vec![None; width as usize * height as usize] }
    }

    pub fn from_samples(width: u32, height: u32, samples: &[PixelSample], sa: &[f64]) -> Result<Self, HeatmapError> {
        let mut g = Self::new(width, height);
        for (s, &v) in samples.iter().zip(sa) {
            g.set(s.x, s.y, v)?;
        }
        Ok(g)
    }

    pub fn set(&mut self, x: u32, y: u32, v: f64) -> Result<(), HeatmapError> {
        if x >= self.width || y >= self.height {
            return Err(HeatmapError::OutOfBounds { x, y, width: self.width, height: self.height });
        }
        if !v.is_finite() {
            return Err(HeatmapError::NonFinite { x, y });
        }
        self.values[y as usize * self.width as usize + x as usize] = Some(v);
        Ok(())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> Option<f64> {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn sampled(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// Gray level of one SA value: `round(255 · clamp((v - lo) / (hi - lo), 0, 1))`,
/// halves rounding up.
pub fn gray_level(v: f64, lo: f64, hi: f64) -> u8 {
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (255.0 * t + 0.5).floor() as u8
}

fn check_range(lo: f64, hi: f64) -> Result<(), HeatmapError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(HeatmapError::BadRange { lo, hi })
    }
}

/// Renders the grid as binary PGM.
pub fn render_heatmap(grid: &SaGrid, lo: f64, hi: f64) -> Result<Vec<u8>, HeatmapError> {
    check_range(lo, hi)?;
    let pixels: Vec<u8> = grid.values.iter().map(|v| v.map_or(0, |v| gray_level(v, lo, hi))).collect();
    Ok(encode_pgm(grid.width, grid.height, &pixels))
}

/// 255 where the sampled SA exceeds `t`, 0 elsewhere (including unsampled pixels).
pub fn threshold_mask(grid: &SaGrid, t: f64) -> ClassMask {
    let pixels = grid.values.iter().map(|v| if v.is_some_and(|v| v > t) { 255 } else { 0 }).collect();
    ClassMask::new(grid.width, grid.height, pixels).expect("grid dimensions")
}

/// Linear-interpolated percentile (`q` in [0, 100]) of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (q / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Batch contrast range: 5th and 95th percentile of the sampled values. A
/// degenerate range is widened to `[lo, lo + 1]`.
pub fn default_range(values: &[f64]) -> Option<(f64, f64)> {
    let lo = percentile(values, 5.0)?;
    let hi = percentile(values, 95.0)?;
    Some(if hi > lo { (lo, hi) } else { (lo, lo + 1.0) })
}
