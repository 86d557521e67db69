//! Independent reference implementations shared by the integration tests
//! and the acceptance suite.

#![allow(dead_code)]

use std::f64::consts::PI;

use chansel::config::{PipelineConfig, Preset};
use chansel::hmmrec::{CharacterModel, GaussianComponent, Gmm, HmmState, ModelSet};
use chansel::imagecore::{Channel, ChannelPlane, ImageRGB};
use chansel::mlselect::{ChannelLabelVector, NUM_CLASSES};
use chansel::synthgen::{random_lexicon, ContrastRegime, CorpusSpec, RenderOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn random_plane(r: &mut ChaCha8Rng, channel: Channel, w: usize, h: usize) -> ChannelPlane {
    let values = (0..w * h).map(|_| r.random_range(0.0..255.0)).collect();
    ChannelPlane::new(channel, w, h, values).unwrap()
}

pub fn random_image(r: &mut ChaCha8Rng, w: usize, h: usize) -> ImageRGB {
    let pixels = (0..w * h).map(|_| [r.random(), r.random(), r.random()]).collect();
    ImageRGB::new(w, h, pixels).unwrap()
}

// ---------------------------------------------------------------- HMM

/// Random single-character model set with `states` states of up to two
/// diagonal Gaussians each.
pub fn random_model_set(r: &mut ChaCha8Rng, states: usize, dim: usize) -> ModelSet {
    let gaussians = r.random_range(1..=2);
    let st = (0..states)
        .map(|_| {
            let raw: Vec<f64> = (0..gaussians).map(|_| r.random_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let components = raw
                .iter()
                .map(|w| GaussianComponent {
                    weight: w / total,
                    mean: (0..dim).map(|_| r.random_range(-1.5..1.5)).collect(),
                    var: (0..dim).map(|_| r.random_range(0.3..2.0)).collect(),
                })
                .collect();
            HmmState {
                gmm: Gmm { components },
                self_prob: r.random_range(0.05..0.95),
            }
        })
        .collect();
    ModelSet::new(
        dim,
        gaussians,
        vec![CharacterModel {
            symbol: 'A',
            states: st,
        }],
    )
}

pub fn random_sequence(r: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect()
}

/// Mixture density evaluated in the linear domain.
pub fn gmm_density(g: &Gmm, x: &[f64]) -> f64 {
    g.components
        .iter()
        .map(|c| {
            let mut p = c.weight;
            for ((xi, m), v) in x.iter().zip(&c.mean).zip(&c.var) {
                p *= (-(xi - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
            }
            p
        })
        .sum()
}

/// Every monotone path that starts in state 0, ends in state `n - 1` and
/// advances by at most one state per frame.
pub fn left_right_paths(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if t == 0 || n == 0 {
        return out;
    }
    let mut path = vec![0];
    fn walk(path: &mut Vec<usize>, n: usize, t: usize, out: &mut Vec<Vec<usize>>) {
        if path.len() == t {
            if *path.last().unwrap() == n - 1 {
                out.push(path.clone());
            }
            return;
        }
        let s = *path.last().unwrap();
        for next in [s, s + 1] {
            if next < n {
                path.push(next);
                walk(path, n, t, out);
                path.pop();
            }
        }
    }
    walk(&mut path, n, t, &mut out);
    out
}

/// Linear-domain probability of one path; the exit from the final state is
/// not part of the score.
pub fn path_probability(states: &[&HmmState], seq: &[Vec<f64>], path: &[usize]) -> f64 {
    let mut p = gmm_density(&states[path[0]].gmm, &seq[0]);
    for t in 1..path.len() {
        let (a, b) = (path[t - 1], path[t]);
        p *= if a == b {
            states[a].self_prob
        } else {
            1.0 - states[a].self_prob
        };
        p *= gmm_density(&states[b].gmm, &seq[t]);
    }
    p
}

/// `(log Σ paths, (log max path, argmax path))`, or `None` when no path fits.
pub fn brute_force_scores(states: &[&HmmState], seq: &[Vec<f64>]) -> Option<(f64, (f64, Vec<usize>))> {
    let paths = left_right_paths(states.len(), seq.len());
    if paths.is_empty() {
        return None;
    }
    let mut total = 0.0;
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for p in paths {
        let v = path_probability(states, seq, &p);
        total += v;
        if v > best.0 {
            best = (v, p);
        }
    }
    Some((total.ln(), (best.0.ln(), best.1)))
}

// ---------------------------------------------------------------- SVM

/// Optimal value of the soft-margin dual, found by enumerating which
/// multipliers sit at 0, at `C`, or strictly between. At most `d + 1` are
/// left free, which is enough to reach an optimal vertex.
pub fn svm_dual_optimum(x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = x.len();
    let d = x[0].len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * dot(&x[i], &x[j])).collect())
        .collect();
    let full = (1u32 << n) - 1;
    let mut best = f64::NEG_INFINITY;
    for fmask in 0..=full {
        let free: Vec<usize> = (0..n).filter(|i| fmask >> i & 1 == 1).collect();
        if free.len() > d + 1 {
            continue;
        }
        let rest = full & !fmask;
        let mut umask = rest;
        loop {
            let mut alpha = vec![0.0; n];
            for (i, a) in alpha.iter_mut().enumerate() {
                if umask >> i & 1 == 1 {
                    *a = c;
                }
            }
            if let Some(sol) = solve_free(&q, y, &alpha, &free) {
                for (k, &i) in free.iter().enumerate() {
                    alpha[i] = sol[k];
                }
                let feasible = free.iter().all(|&i| alpha[i] >= -1e-12 && alpha[i] <= c + 1e-12)
                    && y.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-9;
                if feasible {
                    let lin: f64 = alpha.iter().sum();
                    let mut quad = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            quad += alpha[i] * alpha[j] * q[i][j];
                        }
                    }
                    best = best.max(lin - 0.5 * quad);
                }
            }
            if umask == 0 {
                break;
            }
            umask = (umask - 1) & rest;
        }
    }
    best
}

/// Stationarity on the free multipliers plus the equality constraint.
fn solve_free(q: &[Vec<f64>], y: &[f64], alpha: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let m = free.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let n = y.len();
    let mut a = vec![vec![0.0; m + 2]; m + 1];
    for (r, &i) in free.iter().enumerate() {
        for (k, &j) in free.iter().enumerate() {
            a[r][k] = q[i][j];
        }
        a[r][m] = y[i];
        let fixed: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| q[i][j] * alpha[j]).sum();
        a[r][m + 1] = 1.0 - fixed;
    }
    for (k, &j) in free.iter().enumerate() {
        a[m][k] = y[j];
    }
    a[m][m + 1] = -(0..n).filter(|j| !free.contains(j)).map(|j| y[j] * alpha[j]).sum::<f64>();
    let sol = gauss_solve(a)?;
    Some(sol[..m].to_vec())
}

fn gauss_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Twenty small two-class problems: 4 to 12 points in 1 to 4 dimensions.
pub fn svm_fixtures() -> Vec<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    (0..20u64)
        .map(|k| {
            let mut r = rng(1000 + k);
            let n = 4 + (k as usize * 5) % 9;
            let d = 1 + k as usize % 4;
            let c = [0.1, 1.0, 10.0][k as usize % 3];
            let shift = r.random_range(0.0..1.5);
            let mut x = Vec::new();
            let mut y = Vec::new();
            for i in 0..n {
                let label = if i % 2 == 0 { 1.0 } else { -1.0 };
                x.push((0..d).map(|_| r.random_range(-1.0..1.0) + label * shift).collect());
                y.push(label);
            }
            (x, y, c)
        })
        .collect()
}

// ---------------------------------------------------------------- features

/// Sum of squares of an image and of its full three-level Haar pyramid.
pub fn haar_energies(values: &[f64], w: usize, h: usize) -> (f64, f64) {
    let input: f64 = values.iter().map(|v| v * v).sum();
    let levels = chansel::chanfeat::wavelet::haar_decompose(values, w, h, 3);
    let mut out = 0.0;
    for (i, l) in levels.iter().enumerate() {
        for band in [&l.lh, &l.hl, &l.hh] {
            out += band.iter().map(|v| v * v).sum::<f64>();
        }
        if i + 1 == levels.len() {
            out += l.ll.iter().map(|v| v * v).sum::<f64>();
        }
    }
    (input, out)
}

fn bilinear(p: &ChannelPlane, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let x1 = (x0 + 1).min(p.width() - 1);
    let y1 = (y0 + 1).min(p.height() - 1);
    (1.0 - fx) * (1.0 - fy) * p.get(x0, y0)
        + fx * (1.0 - fy) * p.get(x1, y0)
        + (1.0 - fx) * fy * p.get(x0, y1)
        + fx * fy * p.get(x1, y1)
}

/// Uniform LBP(8,1) histogram computed pixel by pixel: circular neighbors
/// counter-clockwise from the right, bilinear sampling, `>=` comparison, and
/// the 58 uniform codes in ascending order followed by one shared bin.
pub fn lbp_oracle(p: &ChannelPlane) -> Vec<f64> {
    let uniform: Vec<u32> = (0..256u32)
        .filter(|&code| {
            let bits: Vec<u32> = (0..8).map(|i| code >> i & 1).collect();
            (0..8).filter(|&i| bits[i] != bits[(i + 1) % 8]).count() <= 2
        })
        .collect();
    let mut hist = vec![0.0; 59];
    let (w, h) = (p.width(), p.height());
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let center = p.get(x, y);
            let mut code = 0u32;
            for k in 0..8 {
                let a = 2.0 * PI * k as f64 / 8.0;
                let (mut dx, mut dy) = (a.cos(), -a.sin());
                if dx.abs() < 1e-9 {
                    dx = 0.0;
                }
                if dy.abs() < 1e-9 {
                    dy = 0.0;
                }
                if (dx.abs() - 1.0).abs() < 1e-9 {
                    dx = dx.signum();
                }
                if (dy.abs() - 1.0).abs() < 1e-9 {
                    dy = dy.signum();
                }
                if bilinear(p, x as f64 + dx, y as f64 + dy) >= center {
                    code |= 1 << k;
                }
            }
            let bin = uniform.iter().position(|&u| u == code).unwrap_or(58);
            hist[bin] += 1.0;
        }
    }
    let n = ((w - 2) * (h - 2)) as f64;
    hist.iter().map(|v| v / n).collect()
}

/// LPQ histogram from a direct 7x7 short-time Fourier transform at each
/// valid pixel.
pub fn lpq_oracle(p: &ChannelPlane) -> Vec<f64> {
    let a = 1.0 / 7.0;
    let freqs = [(a, 0.0), (0.0, a), (a, a), (a, -a)];
    let mut hist = vec![0.0; 256];
    let (w, h) = (p.width(), p.height());
    let mut count = 0.0;
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            let mut code = 0usize;
            for (i, (ux, uy)) in freqs.iter().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for dy in -3i32..=3 {
                    for dx in -3i32..=3 {
                        let v = p.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                        let phase = -2.0 * PI * (ux * dx as f64 + uy * dy as f64);
                        re += v * phase.cos();
                        im += v * phase.sin();
                    }
                }
                if re > 0.0 {
                    code |= 1 << (2 * i);
                }
                if im > 0.0 {
                    code |= 1 << (2 * i + 1);
                }
            }
            hist[code] += 1.0;
            count += 1.0;
        }
    }
    hist.iter().map(|v| v / count).collect()
}

/// Moments by explicit summation and the HSV histogram from degree-valued
/// hue.
pub fn stats_oracle(img: &ImageRGB) -> Vec<f64> {
    let px = img.pixels();
    let n = px.len() as f64;
    let mut out = Vec::new();
    for c in 0..3 {
        let mut sum = 0.0;
        for p in px {
            sum += p[c] as f64;
        }
        let mean = sum / n;
        let (mut s2, mut s3) = (0.0, 0.0);
        for p in px {
            let d = p[c] as f64 - mean;
            s2 += d * d;
            s3 += d * d * d;
        }
        out.push(mean);
        out.push((s2 / n).sqrt());
        out.push((s3 / n).cbrt());
    }
    let mut hist = vec![0.0; 256];
    for p in px {
        let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let hue_deg = if max == min {
            0.0
        } else if max == r {
            (60.0 * (g - b) / (max - min) + 360.0) % 360.0
        } else if max == g {
            60.0 * (b - r) / (max - min) + 120.0
        } else {
            60.0 * (r - g) / (max - min) + 240.0
        };
        let h = hue_deg / 360.0 * 255.0;
        let s = if max == 0.0 { 0.0 } else { (max - min) / max * 255.0 };
        let v = max;
        let q = |x: f64, k: f64| ((x / 256.0 * k).floor() as usize).min(k as usize - 1);
        hist[q(h, 16.0) * 16 + q(s, 4.0) * 4 + q(v, 4.0)] += 1.0;
    }
    out.extend(hist.iter().map(|v| v / n));
    out
}

/// Gabor bank summary by direct spatial convolution with zero padding. Each
/// kernel is evaluated from its closed form over its full support
/// (three envelope deviations along the elongated axis) with the real part
/// made zero-mean under the envelope.
pub fn gabor_oracle(p: &ChannelPlane) -> Vec<f64> {
    let (w, h) = (p.width() as isize, p.height() as isize);
    let mut out = Vec::new();
    for s in 0..5 {
        let lambda = 4.0 * 2f64.sqrt().powi(s);
        let sigma = 0.56 * lambda;
        let support = (3.0 * sigma / 0.5).ceil() as isize;
        for o in 0..6 {
            let theta = o as f64 * PI / 6.0;
            let kernel = |x: isize, y: isize| {
                let (x, y) = (x as f64, y as f64);
                let xr = x * theta.cos() + y * theta.sin();
                let yr = -x * theta.sin() + y * theta.cos();
                let env = (-(xr * xr + 0.25 * yr * yr) / (2.0 * sigma * sigma)).exp();
                let ph = 2.0 * PI * xr / lambda;
                (env, ph.cos(), ph.sin())
            };
            let (mut es, mut cs) = (0.0, 0.0);
            for y in -support..=support {
                for x in -support..=support {
                    let (e, c, _) = kernel(x, y);
                    es += e;
                    cs += e * c;
                }
            }
            let dc = cs / es;
            let (mut mag, mut energy) = (0.0, 0.0);
            for oy in 0..h {
                for ox in 0..w {
                    let (mut re, mut im) = (0.0, 0.0);
                    for iy in 0..h {
                        for ix in 0..w {
                            let (dx, dy) = (ox - ix, oy - iy);
                            if dx.abs() > support || dy.abs() > support {
                                continue;
                            }
                            let (e, c, sn) = kernel(dx, dy);
                            let v = p.get(ix as usize, iy as usize);
                            re += v * e * (c - dc);
                            im += v * e * sn;
                        }
                    }
                    mag += (re * re + im * im).sqrt();
                    energy += re * re + im * im;
                }
            }
            let n = (w * h) as f64;
            out.push(mag / n);
            out.push(energy / n);
        }
    }
    out
}

// ---------------------------------------------------------------- metrics

/// Per-sample set counts over the positive labels, averaged.
pub fn metrics_oracle(truth: &[ChannelLabelVector], pred: &[ChannelLabelVector]) -> (f64, f64, f64) {
    let sets = |v: &ChannelLabelVector| -> Vec<usize> { (0..NUM_CLASSES).filter(|&k| v.get(k) == 1).collect() };
    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let (mut a, mut p, mut r) = (0.0, 0.0, 0.0);
    for (y, z) in truth.iter().zip(pred) {
        let ys = sets(y);
        let zs = sets(z);
        if ys.is_empty() && zs.is_empty() {
            a += 1.0;
            p += 1.0;
            r += 1.0;
            continue;
        }
        let inter = ys.iter().filter(|k| zs.contains(k)).count();
        let mut uni = ys.clone();
        uni.extend(zs.iter().filter(|k| !ys.contains(k)));
        a += frac(inter, uni.len());
        p += frac(inter, zs.len());
        r += frac(inter, ys.len());
    }
    let n = truth.len() as f64;
    (a / n, p / n, r / n)
}

pub fn random_labels(r: &mut ChaCha8Rng) -> ChannelLabelVector {
    let mut bits = [-1i8; NUM_CLASSES];
    let density = r.random_range(0.0..1.0);
    for b in bits.iter_mut() {
        if r.random_bool(density) {
            *b = 1;
        }
    }
    ChannelLabelVector::new(bits).unwrap()
}

// ---------------------------------------------------------------- corpus

/// Desk-preset corpus: 400 words from a 50-word lexicon over the four
/// standard contrast regimes, half of them with a regime change mid-word.
pub fn desk_corpus_spec(seed: u64) -> CorpusSpec {
    let cfg = PipelineConfig::preset(Preset::Desk);
    CorpusSpec {
        seed,
        charset: cfg.charset.clone(),
        lexicon: random_lexicon(&cfg.charset, cfg.lexicon_size, cfg.word_len.0, cfg.word_len.1, seed).unwrap(),
        count: cfg.count,
        regimes: ContrastRegime::standard_set(),
        noise: None,
        resolution_scale: 1.0,
        split_fraction: 0.5,
        render: RenderOptions::default(),
    }
}
