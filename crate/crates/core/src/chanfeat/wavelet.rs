//! Three-level orthonormal Haar decomposition with per-sub-band mean and
//! standard deviation.

use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

pub const LEVELS: usize = 3;
pub const WAVELET_DIMS: usize = LEVELS * 4 * 2;

/// One level of a 2-D Haar transform.
#[derive(Clone, Debug)]
pub struct HaarLevel {
    pub width: usize,
    pub height: usize,
    pub ll: Vec<f64>,
    /// Horizontal detail (left minus right).
    pub lh: Vec<f64>,
    /// Vertical detail (top minus bottom).
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

impl HaarLevel {
    pub fn bands(&self) -> [&[f64]; 4] {
        [&self.ll, &self.lh, &self.hl, &self.hh]
    }
}

/// Single Haar step. Odd dimensions are first padded by replicating the last
/// row or column.
pub fn haar_step(values: &[f64], width: usize, height: usize) -> HaarLevel {
    let (w2, h2) = (width.div_ceil(2), height.div_ceil(2));
    let at = |x: usize, y: usize| values[y.min(height - 1) * width + x.min(width - 1)];
    let n = w2 * h2;
    let mut level = HaarLevel {
        width: w2,
        height: h2,
        ll: Vec::with_capacity(n),
        lh: Vec::with_capacity(n),
        hl: Vec::with_capacity(n),
        hh: Vec::with_capacity(n),
    };
    for y in 0..h2 {
        for x in 0..w2 {
            let a = at(2 * x, 2 * y);
            let b = at(2 * x + 1, 2 * y);
            let c = at(2 * x, 2 * y + 1);
            let d = at(2 * x + 1, 2 * y + 1);
            level.ll.push((a + b + c + d) * 0.5);
            level.lh.push((a - b + c - d) * 0.5);
            level.hl.push((a + b - c - d) * 0.5);
            level.hh.push((a - b - c + d) * 0.5);
        }
    }
    level
}

/// Recursive decomposition of the LL band, `levels` deep.
pub fn haar_decompose(values: &[f64], width: usize, height: usize, levels: usize) -> Vec<HaarLevel> {
    let mut out: Vec<HaarLevel> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let next = match out.last() {
            None => haar_step(values, width, height),
            Some(prev) => haar_step(&prev.ll, prev.width, prev.height),
        };
        out.push(next);
    }
    out
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    mean_std_rows(values, values.len(), 0, values.len(), 1)
}

/// Mean and standard deviation of the `cols`-wide column range starting at
/// `x0` of a row-major array with rows of `stride`, over `rows` rows.
pub(crate) fn mean_std_rows(values: &[f64], stride: usize, x0: usize, cols: usize, rows: usize) -> (f64, f64) {
    let row = |y: usize| &values[y * stride + x0..y * stride + x0 + cols];
    let n = (cols * rows) as f64;
    let mut sum = 0.0;
    for y in 0..rows {
        for v in row(y) {
            sum += v;
        }
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for y in 0..rows {
        for v in row(y) {
            sq += (v - mean) * (v - mean);
        }
    }
    (mean, (sq / n).sqrt())
}

/// 24 values: for each level, for LL, LH, HL, HH, the band mean then its
/// standard deviation.
pub fn wavelet_feature(plane: &ChannelPlane) -> Result<Vec<f64>> {
    let (w, h) = (plane.width(), plane.height());
    if w < 8 || h < 8 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            min_width: 8,
            min_height: 8,
        });
    }
    let mut out = Vec::with_capacity(WAVELET_DIMS);
    for level in haar_decompose(plane.values(), w, h, LEVELS) {
        for band in level.bands() {
            let (m, s) = mean_std(band);
            out.push(m);
            out.push(s);
        }
    }
    Ok(out)
}
