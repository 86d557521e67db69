//! Per-plane moments of R, G, B plus a 16x4x4 HSV histogram.

use crate::imagecore::{rgb_to_hsv, ImageRGB};

pub const STATS_DIMS: usize = 265;
pub const HSV_BINS: (usize, usize, usize) = (16, 4, 4);

/// Mean, root mean squared deviation, and signed cube root of the mean cubed
/// deviation.
pub fn plane_moments(values: &[f64]) -> [f64; 3] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    [mean, m2.sqrt(), m3.cbrt()]
}

fn quantize(value: f64, levels: usize) -> usize {
    ((value * levels as f64 / 256.0) as usize).min(levels - 1)
}

/// Histogram bin of an HSV triple with each component in `[0, 255]`.
pub fn hsv_bin(h: f64, s: f64, v: f64) -> usize {
    let (nh, ns, nv) = HSV_BINS;
    (quantize(h, nh) * ns + quantize(s, ns)) * nv + quantize(v, nv)
}

/// Nine moments (R, G, B in turn) followed by the 256-bin HSV histogram.
pub fn stats_hist_feature(img: &ImageRGB) -> Vec<f64> {
    let mut out = Vec::with_capacity(STATS_DIMS);
    for c in 0..3 {
        let plane: Vec<f64> = img.pixels().iter().map(|p| p[c] as f64).collect();
        out.extend(plane_moments(&plane));
    }
    let (nh, ns, nv) = HSV_BINS;
    let mut hist = vec![0.0; nh * ns * nv];
    for &[r, g, b] in img.pixels() {
        let (h, s, v) = rgb_to_hsv(r as f64, g as f64, b as f64);
        hist[hsv_bin(h, s, v)] += 1.0;
    }
    let n = img.pixels().len() as f64;
    out.extend(hist.into_iter().map(|v| v / n));
    out
}
