//! Uniform local binary patterns, 8 neighbors on a unit circle.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

pub const NEIGHBORS: usize = 8;
pub const LBP_DIMS: usize = 59;
const NON_UNIFORM_BIN: usize = 58;

/// Circular 0/1 transitions in an 8-bit pattern.
pub fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Maps each 8-bit code to its histogram bin: uniform codes (at most two
/// transitions) get bins 0..58 in ascending code order, the rest share bin 58.
pub fn uniform_bin_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [NON_UNIFORM_BIN as u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                table[code as usize] = next;
                next += 1;
            }
        }
        table
    })
}

/// Sampling offsets `(dx, dy)` of neighbor `p`, counter-clockwise from the
/// right with y pointing down. Offsets within 1e-9 of an integer are snapped.
pub fn neighbor_offset(p: usize) -> (f64, f64) {
    let angle = 2.0 * PI * p as f64 / NEIGHBORS as f64;
    let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    (snap(angle.cos()), snap(-angle.sin()))
}

fn sample(plane: &ChannelPlane, x: f64, y: f64) -> f64 {
    let (w, h) = (plane.width(), plane.height());
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let a = plane.get(x0, y0);
    let b = plane.get(x1, y0);
    let c = plane.get(x0, y1);
    let d = plane.get(x1, y1);
    // Difference form keeps flat neighborhoods exactly flat.
    a + fx * (b - a) + fy * (c - a) + fx * fy * (a - b - c + d)
}

/// Pattern code at interior pixel `(x, y)`; bit `p` is set when neighbor `p`
/// is at least as bright as the center.
pub fn lbp_code(plane: &ChannelPlane, x: usize, y: usize) -> u8 {
    static OFFSETS: OnceLock<[(f64, f64); NEIGHBORS]> = OnceLock::new();
    let offsets = OFFSETS.get_or_init(|| std::array::from_fn(neighbor_offset));
    let center = plane.get(x, y);
    let mut code = 0u8;
    for (p, &(dx, dy)) in offsets.iter().enumerate() {
        if sample(plane, x as f64 + dx, y as f64 + dy) >= center {
            code |= 1 << p;
        }
    }
    code
}

/// L1-normalized 59-bin histogram over all pixels with a full neighborhood.
pub fn lbp_feature(plane: &ChannelPlane) -> Result<Vec<f64>> {
    let (w, h) = (plane.width(), plane.height());
    if w < 3 || h < 3 {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let table = uniform_bin_table();
    let mut hist = vec![0.0; LBP_DIMS];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            hist[table[lbp_code(plane, x, y) as usize] as usize] += 1.0;
        }
    }
    let total = ((w - 2) * (h - 2)) as f64;
    hist.iter_mut().for_each(|v| *v /= total);
    Ok(hist)
}
