//! Local phase quantization over a 7x7 window without decorrelation.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

pub const WINDOW: usize = 7;
pub const LPQ_DIMS: usize = 256;
const HALF: usize = WINDOW / 2;

/// The four low frequencies `(u_x, u_y)` in cycles per pixel.
pub fn frequencies() -> [(f64, f64); 4] {
    let a = 1.0 / WINDOW as f64;
    [(a, 0.0), (0.0, a), (a, a), (a, -a)]
}

/// Packs the signs of `[Re F1, Im F1, Re F2, Im F2, ...]` into a byte, bit
/// set for strictly positive components.
pub fn quantize(coeffs: &[Complex64; 4]) -> u8 {
    let mut code = 0u8;
    for (i, c) in coeffs.iter().enumerate() {
        if c.re > 0.0 {
            code |= 1 << (2 * i);
        }
        if c.im > 0.0 {
            code |= 1 << (2 * i + 1);
        }
    }
    code
}

/// Codes for every pixel whose window fits inside the patch, row-major over
/// the `(w - 6) x (h - 6)` valid region. Uses separable 1-D transforms.
pub fn lpq_codes(plane: &ChannelPlane) -> Result<Vec<u8>> {
    let (w, h) = (plane.width(), plane.height());
    if w < WINDOW || h < WINDOW {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            min_width: WINDOW,
            min_height: WINDOW,
        });
    }
    let a = 1.0 / WINDOW as f64;
    let w1: Vec<Complex64> = (0..WINDOW)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * a * (k as f64 - HALF as f64)))
        .collect();
    let (vw, vh) = (w - WINDOW + 1, h - WINDOW + 1);

    // Horizontal pass: plain box sum and the first-frequency response.
    let mut row_box = vec![0.0; vw * h];
    let mut row_osc = vec![Complex64::default(); vw * h];
    for y in 0..h {
        for x in 0..vw {
            let mut s = 0.0;
            let mut c = Complex64::default();
            for (k, wk) in w1.iter().enumerate() {
                let v = plane.get(x + k, y);
                s += v;
                c += wk * v;
            }
            row_box[y * vw + x] = s;
            row_osc[y * vw + x] = c;
        }
    }

    let mut codes = Vec::with_capacity(vw * vh);
    for y in 0..vh {
        for x in 0..vw {
            let mut f = [Complex64::default(); 4];
            for (k, wk) in w1.iter().enumerate() {
                let i = (y + k) * vw + x;
                f[0] += row_osc[i];
                f[1] += wk * row_box[i];
                f[2] += wk * row_osc[i];
                f[3] += wk.conj() * row_osc[i];
            }
            codes.push(quantize(&f));
        }
    }
    Ok(codes)
}

/// L1-normalized 256-bin histogram of [`lpq_codes`].
pub fn lpq_feature(plane: &ChannelPlane) -> Result<Vec<f64>> {
    let codes = lpq_codes(plane)?;
    let mut hist = vec![0.0; LPQ_DIMS];
    for &c in &codes {
        hist[c as usize] += 1.0;
    }
    let n = codes.len() as f64;
    hist.iter_mut().for_each(|v| *v /= n);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::Channel;

    #[test]
    fn constant_plane_single_code() {
        let p = ChannelPlane::from_fn(Channel::Cb, 12, 9, |_, _| 77.0).unwrap();
        let f = lpq_feature(&p).unwrap();
        assert_eq!(f.iter().filter(|&&v| v > 0.0).count(), 1);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimum_patch_has_one_code() {
        let p = ChannelPlane::from_fn(Channel::Cb, 7, 7, |x, y| (x * y) as f64).unwrap();
        assert_eq!(lpq_codes(&p).unwrap().len(), 1);
        let small = ChannelPlane::from_fn(Channel::Cb, 6, 7, |_, _| 0.0).unwrap();
        assert!(lpq_feature(&small).is_err());
    }
}
