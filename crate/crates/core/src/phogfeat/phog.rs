//! Pyramid histogram of oriented gradients over a single window.

use std::f64::consts::PI;

use crate::chanfeat::l2_normalize;
use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

pub const ORIENTATION_BINS: usize = 8;
pub const PYRAMID_LEVELS: usize = 3;
/// (1 + 4 + 16) cells of 8 bins.
pub const PHOG_DIMS: usize = 168;
const MIN_TOTAL_MAGNITUDE: f64 = 1e-8;

pub struct Gradients {
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

/// 3x3 Sobel with replicated borders; `gy` points down the rows.
pub fn sobel(plane: &ChannelPlane) -> Gradients {
    let (w, h) = (plane.width(), plane.height());
    let at = |x: isize, y: isize| {
        plane.get(
            x.clamp(0, w as isize - 1) as usize,
            y.clamp(0, h as isize - 1) as usize,
        )
    };
    let n = w * h;
    let mut g = Gradients {
        gx: Vec::with_capacity(n),
        gy: Vec::with_capacity(n),
        magnitude: Vec::with_capacity(n),
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            g.gx.push(gx);
            g.gy.push(gy);
            g.magnitude.push(gx.hypot(gy));
        }
    }
    g
}

/// Signed orientation bin with bins centered on multiples of 45 degrees,
/// angle measured counter-clockwise with the y axis pointing up.
pub fn orientation_bin(gx: f64, gy: f64) -> usize {
    let theta = (-gy).atan2(gx);
    let step = 2.0 * PI / ORIENTATION_BINS as f64;
    let b = ((theta + step / 2.0) / step).floor() as isize;
    b.rem_euclid(ORIENTATION_BINS as isize) as usize
}

/// Offset of cell `(cx, cy)` at pyramid `level` within the descriptor.
pub fn cell_offset(level: usize, cx: usize, cy: usize) -> usize {
    let before: usize = (0..level).map(|l| 1usize << (2 * l)).sum();
    let side = 1usize << level;
    (before + cy * side + cx) * ORIENTATION_BINS
}

pub fn phog_descriptor(window: &ChannelPlane, width: usize, height: usize) -> Result<Vec<f64>> {
    if window.width() != width || window.height() != height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            actual: window.width() * window.height(),
        });
    }
    let g = sobel(window);
    let mut out = vec![0.0; PHOG_DIMS];
    let mut total = 0.0;
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let m = g.magnitude[i];
            if m == 0.0 {
                continue;
            }
            total += m;
            let bin = orientation_bin(g.gx[i], g.gy[i]);
            for level in 0..PYRAMID_LEVELS {
                let side = 1 << level;
                let cx = x * side / width;
                let cy = y * side / height;
                out[cell_offset(level, cx, cy) + bin] += m;
            }
        }
    }
    if total < MIN_TOTAL_MAGNITUDE {
        return Ok(vec![0.0; PHOG_DIMS]);
    }
    l2_normalize(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::Channel;

    #[test]
    fn layout() {
        assert_eq!(cell_offset(1, 0, 0), 8);
        assert_eq!(cell_offset(2, 0, 0), 40);
        assert_eq!(cell_offset(2, 3, 3) + ORIENTATION_BINS, PHOG_DIMS);
    }

    #[test]
    fn constant_window_is_zero() {
        let p = ChannelPlane::from_fn(Channel::G, 8, 40, |_, _| 99.0).unwrap();
        assert_eq!(phog_descriptor(&p, 8, 40).unwrap(), vec![0.0; PHOG_DIMS]);
    }

    #[test]
    fn bins_of_axis_directions() {
        assert_eq!(orientation_bin(1.0, 0.0), 0);
        assert_eq!(orientation_bin(0.0, -1.0), 2);
        assert_eq!(orientation_bin(-1.0, 0.0), 4);
        assert_eq!(orientation_bin(0.0, 1.0), 6);
        assert_eq!(orientation_bin(1.0, -1.0), 1);
    }

    #[test]
    fn wrong_size_is_rejected() {
        let p = ChannelPlane::from_fn(Channel::G, 9, 40, |_, _| 0.0).unwrap();
        assert!(phog_descriptor(&p, 8, 40).is_err());
    }
}
