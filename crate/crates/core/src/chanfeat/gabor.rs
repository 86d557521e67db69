//! Complex Gabor filter bank, 5 scales by 6 orientations, applied by FFT
//! convolution with zero-padded borders.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

pub const SCALES: usize = 5;
pub const ORIENTATIONS: usize = 6;
pub const GABOR_DIMS: usize = SCALES * ORIENTATIONS * 2;

const ASPECT: f64 = 0.5;
const SIGMA_PER_WAVELENGTH: f64 = 0.56;

/// Center wavelength in pixels of scale `s`: 4, 4√2, 8, 8√2, 16.
pub fn wavelength(scale: usize) -> f64 {
    4.0 * 2f64.sqrt().powi(scale as i32)
}

pub fn orientation(index: usize) -> f64 {
    index as f64 * PI / ORIENTATIONS as f64
}

/// Support radius of the untruncated kernel (three envelope deviations
/// along the elongated axis).
pub fn natural_radius(scale: usize) -> usize {
    (3.0 * SIGMA_PER_WAVELENGTH * wavelength(scale) / ASPECT).ceil() as usize
}

/// Square complex kernel of side `2 * radius + 1`, row-major.
#[derive(Clone, Debug)]
pub struct GaborKernel {
    pub radius: usize,
    pub taps: Vec<Complex64>,
}

impl GaborKernel {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn at(&self, dx: isize, dy: isize) -> Complex64 {
        let r = self.radius as isize;
        self.taps[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }
}

/// Taps within `radius` of the kernel whose real part is shifted to zero DC
/// over the full natural support, so truncation never changes a tap.
pub fn gabor_kernel(scale: usize, orient: usize, radius: usize) -> GaborKernel {
    let lambda = wavelength(scale);
    let sigma = SIGMA_PER_WAVELENGTH * lambda;
    let (sin_t, cos_t) = orientation(orient).sin_cos();
    let tap = |x: isize, y: isize| {
        let (x, y) = (x as f64, y as f64);
        let xr = x * cos_t + y * sin_t;
        let yr = -x * sin_t + y * cos_t;
        let envelope = (-(xr * xr + ASPECT * ASPECT * yr * yr) / (2.0 * sigma * sigma)).exp();
        (envelope, Complex64::from_polar(1.0, 2.0 * PI * xr / lambda))
    };
    let n = natural_radius(scale) as isize;
    let (mut env_sum, mut re_sum) = (0.0, 0.0);
    for y in -n..=n {
        for x in -n..=n {
            let (e, c) = tap(x, y);
            env_sum += e;
            re_sum += e * c.re;
        }
    }
    let dc = re_sum / env_sum;
    let r = radius as isize;
    let mut taps = Vec::with_capacity((2 * radius + 1).pow(2));
    for y in -r..=r {
        for x in -r..=r {
            let (e, c) = tap(x, y);
            taps.push(Complex64::new(e * (c.re - dc), e * c.im));
        }
    }
    GaborKernel { radius, taps }
}

/// Kernel radius used on a `width x height` patch. Taps farther than the
/// patch extent never overlap the patch, so truncating there is exact.
pub fn effective_radius(scale: usize, width: usize, height: usize) -> usize {
    natural_radius(scale).min(width.max(height) - 1)
}

struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(planner: &mut FftPlanner<f64>, width: usize, height: usize) -> Self {
        Fft2 {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        let (w, h) = (self.width, self.height);
        let mut scratch = vec![Complex64::default(); row.get_inplace_scratch_len().max(col.get_inplace_scratch_len())];
        row.process_with_scratch(data, &mut scratch);
        let mut t = vec![Complex64::default(); w * h];
        for y in 0..h {
            for x in 0..w {
                t[x * h + y] = data[y * w + x];
            }
        }
        col.process_with_scratch(&mut t, &mut scratch);
        let scale = if inverse { 1.0 / (w * h) as f64 } else { 1.0 };
        for y in 0..h {
            for x in 0..w {
                data[y * w + x] = t[x * h + y] * scale;
            }
        }
    }
}

/// Smallest length `>= n` with no prime factor above 5.
fn smooth_len(n: usize) -> usize {
    (n..)
        .find(|&m| {
            let mut m = m;
            for p in [2, 3, 5] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .expect("unbounded search")
}

/// Precomputed kernel spectra for one patch size.
struct Bank {
    fft: Fft2,
    radius: Vec<usize>,
    spectra: Vec<Vec<Complex64>>,
}

impl Bank {
    fn new(planner: &mut FftPlanner<f64>, width: usize, height: usize) -> Self {
        let pad = effective_radius(SCALES - 1, width, height);
        let (fw, fh) = (smooth_len(width + 2 * pad), smooth_len(height + 2 * pad));
        let fft = Fft2::new(planner, fw, fh);
        let mut radius = Vec::new();
        let mut spectra = Vec::new();
        for s in 0..SCALES {
            let r = effective_radius(s, width, height);
            for o in 0..ORIENTATIONS {
                let k = gabor_kernel(s, o, r);
                let mut buf = vec![Complex64::default(); fw * fh];
                let side = k.side();
                for y in 0..side {
                    buf[y * fw..y * fw + side].copy_from_slice(&k.taps[y * side..(y + 1) * side]);
                }
                fft.run(&mut buf, false);
                radius.push(r);
                spectra.push(buf);
            }
        }
        Bank {
            fft,
            radius,
            spectra,
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static BANKS: RefCell<HashMap<(usize, usize), Arc<Bank>>> = RefCell::new(HashMap::new());
}

fn bank_for(width: usize, height: usize) -> Arc<Bank> {
    BANKS.with(|banks| {
        banks
            .borrow_mut()
            .entry((width, height))
            .or_insert_with(|| {
                PLANNER.with(|p| Arc::new(Bank::new(&mut p.borrow_mut(), width, height)))
            })
            .clone()
    })
}

fn check_size(plane: &ChannelPlane) -> Result<()> {
    if plane.width() < 8 || plane.height() < 8 {
        return Err(Error::PatchTooSmall {
            width: plane.width(),
            height: plane.height(),
            min_width: 8,
            min_height: 8,
        });
    }
    Ok(())
}

/// All 30 filter responses, each row-major with the patch's dimensions,
/// ordered scale-major.
pub fn gabor_responses(plane: &ChannelPlane) -> Result<Vec<Vec<Complex64>>> {
    check_size(plane)?;
    let (w, h) = (plane.width(), plane.height());
    let bank = bank_for(w, h);
    let (fw, fh) = (bank.fft.width, bank.fft.height);
    let mut input = vec![Complex64::default(); fw * fh];
    for y in 0..h {
        for x in 0..w {
            input[y * fw + x] = Complex64::new(plane.get(x, y), 0.0);
        }
    }
    bank.fft.run(&mut input, false);
    let mut out = Vec::with_capacity(SCALES * ORIENTATIONS);
    let mut buf = vec![Complex64::default(); fw * fh];
    for (spec, &r) in bank.spectra.iter().zip(&bank.radius) {
        for ((b, a), k) in buf.iter_mut().zip(&input).zip(spec) {
            *b = a * k;
        }
        bank.fft.run(&mut buf, true);
        // Full linear convolution index (y + r, x + r) is the centered output.
        let mut resp = Vec::with_capacity(w * h);
        for y in 0..h {
            resp.extend_from_slice(&buf[(y + r) * fw + r..(y + r) * fw + r + w]);
        }
        out.push(resp);
    }
    Ok(out)
}

/// Mean magnitude and mean squared magnitude of each of the 30 responses.
pub fn gabor_feature(plane: &ChannelPlane) -> Result<Vec<f64>> {
    let responses = gabor_responses(plane)?;
    Ok(summarize(&responses))
}

pub(crate) fn summarize(responses: &[Vec<Complex64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(GABOR_DIMS);
    for resp in responses {
        let n = resp.len() as f64;
        let mean = resp.iter().map(|c| c.norm()).sum::<f64>() / n;
        let energy = resp.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
        out.push(mean);
        out.push(energy);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::Channel;

    #[test]
    fn kernels_have_zero_dc() {
        for s in 0..SCALES {
            for o in 0..ORIENTATIONS {
                let k = gabor_kernel(s, o, natural_radius(s));
                let sum: Complex64 = k.taps.iter().sum();
                assert!(sum.norm() < 1e-9, "scale {s} orient {o}: {sum}");
            }
        }
    }

    #[test]
    fn constant_plane_interior_response_vanishes() {
        let p = ChannelPlane::from_fn(Channel::Y, 48, 48, |_, _| 120.0).unwrap();
        let resp = gabor_responses(&p).unwrap();
        let r = effective_radius(0, 48, 48);
        for o in 0..ORIENTATIONS {
            for y in r..48 - r {
                for x in r..48 - r {
                    assert!(resp[o][y * 48 + x].norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn stripe_grating_prefers_matched_orientation() {
        // Vertical stripes with an 8 px period vary along x, i.e. 0 degrees.
        let p = ChannelPlane::from_fn(Channel::Y, 32, 32, |x, _| {
            128.0 + 100.0 * (2.0 * PI * x as f64 / 8.0).cos()
        })
        .unwrap();
        let f = gabor_feature(&p).unwrap();
        assert_eq!(f.len(), GABOR_DIMS);
        let energy = |s: usize, o: usize| f[(s * ORIENTATIONS + o) * 2 + 1];
        assert!(energy(2, 0) > energy(2, 3));
        assert!(f.iter().all(|v| v.is_finite()));
        assert!(f.chunks(2).all(|c| c[1] >= 0.0));
    }

    #[test]
    fn too_small() {
        let p = ChannelPlane::from_fn(Channel::Y, 8, 7, |_, _| 0.0).unwrap();
        assert!(gabor_feature(&p).is_err());
    }
}
