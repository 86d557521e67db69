//! Deterministic synthetic word images with channel-targeted contrast.
//!
//! Each regime pairs a foreground and background color whose difference is
//! large in one target channel and close to zero in at least four others.
//! Clutter shapes are drawn with color offsets from the null space of the
//! target channel's linear RGB coefficients, so the target plane stays clean
//! while the other planes pick up distracting edges.

pub mod font;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imagecore::{normalize_height, to_channel_set, Channel, ImageRGB, Resample, NORMALIZED_HEIGHT};
use crate::textfmt::{fmt_f64, Writer};

use font::{GLYPH_HEIGHT, GLYPH_WIDTH};

pub const PRNG_NAME: &str = "ChaCha8Rng";
pub const MAX_NOISE_LEVEL: f64 = 30.0;
const GLYPH_SCALE: usize = 4;
const ADVANCE: usize = (GLYPH_WIDTH + 1) * GLYPH_SCALE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Gaussian,
    SaltPepper,
    Speckle,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SaltPepper => "saltpepper",
            NoiseKind::Speckle => "speckle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Percentage in `[0, 30]`.
    pub level: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64) -> Result<Self> {
        if !(0.0..=MAX_NOISE_LEVEL).contains(&level) {
            return Err(Error::LevelOutOfRange(level));
        }
        Ok(NoiseSpec { kind, level })
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.level)
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, level) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("noise {s:?} is not <kind>:<level>")))?;
        let kind = match kind.to_ascii_lowercase().as_str() {
            "gaussian" => NoiseKind::Gaussian,
            "saltpepper" | "salt-pepper" => NoiseKind::SaltPepper,
            "speckle" => NoiseKind::Speckle,
            _ => {
                return Err(Error::Config(format!(
                    "unknown noise kind {kind:?}; expected gaussian, saltpepper or speckle"
                )))
            }
        };
        let level: f64 = level
            .parse()
            .map_err(|_| Error::Config(format!("bad noise level {level:?}")))?;
        NoiseSpec::new(kind, level)
    }
}

/// Linear RGB coefficients of a channel, for the channels that have them.
pub fn linear_coefficients(channel: Channel) -> Option<[f64; 3]> {
    match channel {
        Channel::R => Some([1.0, 0.0, 0.0]),
        Channel::G => Some([0.0, 1.0, 0.0]),
        Channel::B => Some([0.0, 0.0, 1.0]),
        Channel::Y => Some([0.299, 0.587, 0.114]),
        Channel::Cb => Some([-0.168736, -0.331264, 0.5]),
        Channel::Cr => Some([0.5, -0.418688, -0.081312]),
        _ => None,
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Orthonormal basis of the RGB directions that leave `coeffs` unchanged.
pub fn null_space(coeffs: [f64; 3]) -> [[f64; 3]; 2] {
    let a = unit(coeffs);
    let seed = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = unit(cross(a, seed));
    [u, cross(a, u)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContrastRegime {
    pub target: Channel,
    pub fg: [u8; 3],
    pub bg: [u8; 3],
}

impl ContrastRegime {
    /// Built-in color pairs. Each keeps the remaining linear channels and
    /// the HSV components it can hold fixed within about one level.
    pub fn standard(target: Channel) -> Option<Self> {
        let (fg, bg) = match target {
            // B stays the maximum and R the minimum, so S and V are unchanged.
            Channel::G => ([70, 160, 190], [70, 100, 190]),
            // Gray pair: chroma, hue and saturation are all zero.
            Channel::Y => ([160, 160, 160], [100, 100, 100]),
            // Moves along Y x Cb; B stays the maximum.
            Channel::Cr => ([150, 120, 190], [90, 150, 190]),
            // Moves along Y x Cr; R stays the maximum.
            Channel::Cb => ([195, 120, 174], [195, 140, 70]),
            _ => return None,
        };
        Some(ContrastRegime { target, fg, bg })
    }

    pub fn standard_set() -> Vec<Self> {
        [Channel::G, Channel::Y, Channel::Cr, Channel::Cb]
            .into_iter()
            .filter_map(ContrastRegime::standard)
            .collect()
    }

    /// `channel(fg) − channel(bg)` for all nine channels.
    pub fn pair_contrast(&self) -> [f64; 9] {
        let px = |c: [u8; 3]| {
            let cs = to_channel_set(&ImageRGB::filled(1, 1, c).expect("1x1"));
            let mut v = [0.0; 9];
            for (i, p) in cs.planes().iter().enumerate() {
                v[i] = p.values()[0];
            }
            v
        };
        let (f, b) = (px(self.fg), px(self.bg));
        std::array::from_fn(|i| f[i] - b[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    /// Largest per-axis clutter offset along the null-space basis.
    pub clutter: f64,
    /// Clutter shapes per 10 columns.
    pub clutter_density: f64,
    /// Horizontal gain ramp: gain runs from `1 − g/2` to `1 + g/2`.
    pub illumination: Option<f64>,
    /// Amplitude in pixels of a sinusoidal vertical text offset.
    pub wave: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            clutter: 100.0,
            clutter_density: 3.0,
            illumination: None,
            wave: 0.0,
        }
    }
}

/// Target channel per column range: `(first column, channel)` pairs in
/// increasing column order, the first starting at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetMap {
    segments: Vec<(usize, Channel)>,
}

impl TargetMap {
    pub fn uniform(channel: Channel) -> Self {
        TargetMap {
            segments: vec![(0, channel)],
        }
    }

    pub fn new(segments: Vec<(usize, Channel)>) -> Result<Self> {
        let ok = segments.first().is_some_and(|s| s.0 == 0) && segments.windows(2).all(|w| w[0].0 < w[1].0);
        if !ok {
            return Err(Error::Config("target segments must start at 0 and increase".into()));
        }
        Ok(TargetMap { segments })
    }

    pub fn segments(&self) -> &[(usize, Channel)] {
        &self.segments
    }

    pub fn is_uniform(&self) -> bool {
        self.segments.len() == 1
    }

    pub fn at(&self, x: f64) -> Channel {
        self.segments
            .iter()
            .rev()
            .find(|s| x >= s.0 as f64)
            .map_or(self.segments[0].1, |s| s.1)
    }

    /// Distance from `x` to the nearest segment boundary, infinite for a
    /// uniform map.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        self.segments[1..]
            .iter()
            .map(|s| (x - s.0 as f64).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for TargetMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.segments[0].1)?;
        for (x, c) in &self.segments[1..] {
            write!(f, "|{x}|{c}")?;
        }
        Ok(())
    }
}

impl FromStr for TargetMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() % 2 == 0 {
            return Err(Error::Config(format!("bad target map {s:?}")));
        }
        let mut segments = vec![(0, parts[0].parse()?)];
        for pair in parts[1..].chunks(2) {
            let x = pair[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad target boundary {:?}", pair[0])))?;
            segments.push((x, pair[1].parse()?));
        }
        TargetMap::new(segments)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderMeta {
    pub text: String,
    pub targets: TargetMap,
    pub seed: u64,
    /// Text pixels of the rendered image, row-major.
    pub mask: Vec<bool>,
    /// `channel(fg) − channel(bg)` of each segment's regime.
    pub pair_contrast: Vec<[f64; 9]>,
    /// Mean over text pixels minus mean over background pixels within each
    /// segment's columns, per channel of the final image.
    pub contrast: Vec<[f64; 9]>,
}

/// Per-channel text/background contrast over the columns `x0..x1`.
pub fn measure_contrast(img: &ImageRGB, mask: &[bool], x0: usize, x1: usize) -> [f64; 9] {
    let cs = to_channel_set(img);
    let w = img.width();
    let mut out = [0.0; 9];
    for (i, p) in cs.planes().iter().enumerate() {
        let (mut fs, mut fc, mut bs, mut bc) = (0.0, 0usize, 0.0, 0usize);
        for (j, (v, &m)) in p.values().iter().zip(mask).enumerate() {
            if !(x0..x1).contains(&(j % w)) {
                continue;
            }
            if m {
                fs += v;
                fc += 1;
            } else {
                bs += v;
                bc += 1;
            }
        }
        out[i] = fs / fc.max(1) as f64 - bs / bc.max(1) as f64;
    }
    out
}

/// Contrast of every segment of `targets`.
pub fn segment_contrasts(img: &ImageRGB, mask: &[bool], targets: &TargetMap) -> Vec<[f64; 9]> {
    let segs = targets.segments();
    (0..segs.len())
        .map(|i| {
            let end = segs.get(i + 1).map_or(img.width(), |s| s.0);
            measure_contrast(img, mask, segs[i].0.min(img.width()), end.min(img.width()))
        })
        .collect()
}

pub fn render_word(text: &str, regime: &ContrastRegime, seed: u64) -> Result<(ImageRGB, RenderMeta)> {
    render_word_with(text, regime, seed, &RenderOptions::default())
}

pub fn render_word_with(
    text: &str,
    regime: &ContrastRegime,
    seed: u64,
    opts: &RenderOptions,
) -> Result<(ImageRGB, RenderMeta)> {
    render_segments(text, &[(0, *regime)], seed, opts)
}

/// Renders `text` with regime changes: `(first character, regime)` pairs,
/// the first starting at character 0. The color boundary sits in the gap
/// before each segment's first character.
pub fn render_segments(
    text: &str,
    regimes: &[(usize, ContrastRegime)],
    seed: u64,
    opts: &RenderOptions,
) -> Result<(ImageRGB, RenderMeta)> {
    let glyphs = text
        .chars()
        .map(|c| font::glyph(c).ok_or(Error::UnknownGlyph(c)))
        .collect::<Result<Vec<_>>>()?;
    if glyphs.is_empty() {
        return Err(Error::Config("cannot render an empty word".into()));
    }
    let ordered = regimes.first().is_some_and(|r| r.0 == 0)
        && regimes.windows(2).all(|w| w[0].0 < w[1].0)
        && regimes.last().is_some_and(|r| r.0 < glyphs.len());
    if !ordered {
        return Err(Error::Config("regime segments must start at 0 and stay inside the word".into()));
    }
    let bases = regimes
        .iter()
        .map(|(_, r)| {
            linear_coefficients(r.target)
                .map(null_space)
                .ok_or_else(|| Error::Config(format!("regime target {} has no linear form", r.target)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let height = NORMALIZED_HEIGHT;
    let glyph_h = GLYPH_HEIGHT * GLYPH_SCALE;
    let left = 6 + rng.random_range(0..=6usize);
    let right = 6 + rng.random_range(0..=6usize);
    let top = (height - glyph_h) as isize / 2 + rng.random_range(-2..=2i64) as isize;
    let width = left + glyphs.len() * ADVANCE - GLYPH_SCALE + right;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let bounds: Vec<usize> = regimes
        .iter()
        .map(|&(c, _)| if c == 0 { 0 } else { left + c * ADVANCE - GLYPH_SCALE / 2 })
        .collect();
    let segment_of = |x: usize| bounds.iter().rposition(|&b| x >= b).unwrap_or(0);

    let mut mask = vec![false; width * height];
    for x in 0..width {
        let shift = (opts.wave * (x as f64 / 24.0 + phase).sin()).round() as isize;
        let Some(rel) = x.checked_sub(left) else {
            continue;
        };
        let (ci, gx) = (rel / ADVANCE, rel % ADVANCE / GLYPH_SCALE);
        if ci >= glyphs.len() || gx >= GLYPH_WIDTH {
            continue;
        }
        for y in 0..height {
            let gy = y as isize - top - shift;
            if gy < 0 || gy >= glyph_h as isize {
                continue;
            }
            mask[y * width + x] = font::pixel(glyphs[ci], gx, gy as usize / GLYPH_SCALE);
        }
    }

    let mut canvas: Vec<[f64; 3]> = mask
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let r = &regimes[segment_of(i % width)].1;
            let c = if m { r.fg } else { r.bg };
            [c[0] as f64, c[1] as f64, c[2] as f64]
        })
        .collect();

    // Each shape is clipped to the segment holding its left edge.
    let shapes = (opts.clutter_density * width as f64 / 10.0).round() as usize;
    for _ in 0..shapes {
        let w = rng.random_range(2..=12i64);
        let h = rng.random_range(2..=24i64);
        let x0 = rng.random_range(-w + 1..width as i64) as isize;
        let y0 = rng.random_range(-h + 1..height as i64) as isize;
        let (w, h) = (w as isize, h as isize);
        let b1 = rng.random_range(-opts.clutter..=opts.clutter);
        let b2 = rng.random_range(-opts.clutter..=opts.clutter);
        let seg = segment_of(x0.max(0) as usize);
        let basis = bases[seg];
        let seg_end = bounds.get(seg + 1).map_or(width, |&b| b) as isize;
        let offset: [f64; 3] = std::array::from_fn(|k| b1 * basis[0][k] + b2 * basis[1][k]);
        for y in y0.max(0)..(y0 + h).min(height as isize) {
            for x in x0.max(0)..(x0 + w).min(seg_end) {
                let px = &mut canvas[y as usize * width + x as usize];
                for k in 0..3 {
                    px[k] += offset[k];
                }
            }
        }
    }
    if let Some(g) = opts.illumination {
        for y in 0..height {
            for x in 0..width {
                let gain = 1.0 + g * (x as f64 / (width - 1).max(1) as f64 - 0.5);
                for v in &mut canvas[y * width + x] {
                    *v *= gain;
                }
            }
        }
    }
    let pixels = canvas
        .iter()
        .map(|p| std::array::from_fn(|k| p[k].round().clamp(0.0, 255.0) as u8))
        .collect();
    let img = ImageRGB::new(width, height, pixels)?;
    let targets = TargetMap::new(bounds.iter().zip(regimes).map(|(&b, (_, r))| (b, r.target)).collect())?;
    let contrast = segment_contrasts(&img, &mask, &targets);
    Ok((
        img,
        RenderMeta {
            text: text.to_string(),
            targets,
            seed,
            mask,
            pair_contrast: regimes.iter().map(|(_, r)| r.pair_contrast()).collect(),
            contrast,
        },
    ))
}

/// Adds seeded noise. The same seed draws the same underlying pattern at
/// every level, so stronger levels are scaled versions of weaker ones.
pub fn apply_noise(img: &ImageRGB, spec: &NoiseSpec, seed: u64) -> Result<ImageRGB> {
    let spec = NoiseSpec::new(spec.kind, spec.level)?;
    if spec.level == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spec.level / 100.0;
    let mut out = img.clone();
    for px in out.pixels_mut() {
        match spec.kind {
            NoiseKind::Gaussian => {
                let sigma = p * 255.0;
                for v in px.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v = (*v as f64 + sigma * z).round().clamp(0.0, 255.0) as u8;
                }
            }
            NoiseKind::SaltPepper => {
                let u: f64 = rng.random();
                let salt: bool = rng.random();
                if u < p {
                    *px = if salt { [255; 3] } else { [0; 3] };
                }
            }
            NoiseKind::Speckle => {
                let half = p * 3f64.sqrt();
                for v in px.iter_mut() {
                    let u = (2.0 * rng.random::<f64>() - 1.0) * half;
                    *v = (*v as f64 * (1.0 + u)).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    }
    Ok(out)
}

/// Downsamples to `scale` of the original height, then restores the
/// normalized height.
pub fn degrade_resolution(img: &ImageRGB, scale: f64) -> Result<ImageRGB> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::Config(format!("resolution scale {scale} outside (0, 1]")));
    }
    let (w, h) = (img.width(), img.height());
    let nh = (h as f64 * scale).round() as usize;
    if nh < 4 {
        return Err(Error::DegenerateImage(format!("height {nh} after scaling by {scale}")));
    }
    let nw = ((w as f64 * scale).round() as usize).max(1);
    let small = img.resize(nw, nh);
    normalize_height(&small, NORMALIZED_HEIGHT)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub charset: String,
    pub lexicon: Vec<String>,
    pub count: usize,
    pub regimes: Vec<ContrastRegime>,
    pub noise: Option<NoiseSpec>,
    pub resolution_scale: f64,
    /// Fraction of words whose second half uses a different regime.
    pub split_fraction: f64,
    pub render: RenderOptions,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("corpus count must be at least 1".into()));
        }
        if self.regimes.is_empty() {
            return Err(Error::Config("corpus needs at least one contrast regime".into()));
        }
        for r in &self.regimes {
            if linear_coefficients(r.target).is_none() {
                return Err(Error::Config(format!("regime target {} has no linear form", r.target)));
            }
        }
        if !(self.resolution_scale > 0.0 && self.resolution_scale <= 1.0) {
            return Err(Error::Config(format!(
                "resolution scale {} outside (0, 1]",
                self.resolution_scale
            )));
        }
        if let Some(n) = &self.noise {
            NoiseSpec::new(n.kind, n.level)?;
        }
        if !(0.0..=1.0).contains(&self.split_fraction) {
            return Err(Error::Config(format!("split fraction {} outside [0, 1]", self.split_fraction)));
        }
        for c in self.charset.chars() {
            if !font::has_glyph(c) {
                return Err(Error::UnknownGlyph(c));
            }
        }
        if self.lexicon.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        for w in &self.lexicon {
            if w.is_empty() {
                return Err(Error::Config("empty lexicon word".into()));
            }
            if let Some(c) = w.chars().find(|&c| !self.charset.contains(c)) {
                return Err(Error::UnknownGlyph(c));
            }
        }
        Ok(())
    }

    /// Canonical text form hashed into the manifest header.
    pub fn canonical_text(&self) -> String {
        let mut w = Writer::new();
        w.line(&["chansel-corpus-spec", "1"]);
        w.line(&["seed", &self.seed.to_string()]);
        w.line(&["charset", &self.charset]);
        w.line(&["count", &self.count.to_string()]);
        for r in &self.regimes {
            let c = |v: [u8; 3]| format!("{},{},{}", v[0], v[1], v[2]);
            w.line(&["regime", r.target.name(), &c(r.fg), &c(r.bg)]);
        }
        let noise = self.noise.map_or("none".to_string(), |n| n.to_string());
        w.line(&["noise", &noise]);
        w.line(&["scale", &fmt_f64(self.resolution_scale)]);
        w.line(&["split", &fmt_f64(self.split_fraction)]);
        w.line(&["clutter", &fmt_f64(self.render.clutter), &fmt_f64(self.render.clutter_density)]);
        let illum = self.render.illumination.map_or("none".to_string(), fmt_f64);
        w.line(&["illumination", &illum]);
        w.line(&["wave", &fmt_f64(self.render.wave)]);
        for word in &self.lexicon {
            w.line(&["word", word]);
        }
        w.into_string()
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Random words over `charset` with lengths in `[min_len, max_len]`,
/// without duplicates.
pub fn random_lexicon(charset: &str, size: usize, min_len: usize, max_len: usize, seed: u64) -> Result<Vec<String>> {
    let symbols: Vec<char> = charset.chars().collect();
    if symbols.is_empty() || min_len == 0 || min_len > max_len {
        return Err(Error::Config("bad lexicon parameters".into()));
    }
    let capacity: f64 = (min_len..=max_len).map(|l| (symbols.len() as f64).powi(l as i32)).sum();
    if (size as f64) > capacity {
        return Err(Error::Config(format!("cannot draw {size} distinct words")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(size);
    while out.len() < size {
        let len = rng.random_range(min_len..=max_len);
        let w: String = (0..len).map(|_| symbols[rng.random_range(0..symbols.len())]).collect();
        if !out.contains(&w) {
            out.push(w);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRecord {
    pub id: String,
    /// Relative to the manifest's directory.
    pub path: String,
    pub text: String,
    pub target: TargetMap,
    pub noise: Option<NoiseSpec>,
    pub scale: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub spec_hash: String,
    pub prng: String,
    pub records: Vec<ManifestRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const LEXICON_FILE: &str = "lexicon.txt";

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# chansel-corpus 1 spec_sha256={} prng={}\n# id\tpath\ttext\ttarget\tnoise\tscale\tseed\n",
            self.spec_hash, self.prng
        );
        for r in &self.records {
            let noise = r.noise.map_or("none".to_string(), |n| n.to_string());
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.id, r.path, r.text, r.target, noise, r.scale, r.seed
            ));
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, reason: &str| Error::Parse {
            location: format!("{}:{}", path.display(), line + 1),
            reason: reason.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| bad(0, "empty manifest"))?;
        let mut spec_hash = None;
        let mut prng = None;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("#") || tokens.next() != Some("chansel-corpus") || tokens.next() != Some("1") {
            return Err(bad(0, "missing chansel-corpus header"));
        }
        for t in tokens {
            if let Some(v) = t.strip_prefix("spec_sha256=") {
                spec_hash = Some(v.to_string());
            } else if let Some(v) = t.strip_prefix("prng=") {
                prng = Some(v.to_string());
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(bad(i, "expected 7 tab-separated fields"));
            }
            let noise = match f[4] {
                "none" => None,
                s => Some(s.parse().map_err(|e: Error| bad(i, &e.to_string()))?),
            };
            records.push(ManifestRecord {
                id: f[0].to_string(),
                path: f[1].to_string(),
                text: f[2].to_string(),
                target: f[3].parse().map_err(|e: Error| bad(i, &e.to_string()))?,
                noise,
                scale: f[5].parse().map_err(|_| bad(i, "bad scale"))?,
                seed: f[6].parse().map_err(|_| bad(i, "bad seed"))?,
            });
        }
        Ok(Manifest {
            spec_hash: spec_hash.ok_or_else(|| bad(0, "missing spec hash"))?,
            prng: prng.ok_or_else(|| bad(0, "missing prng"))?,
            records,
        })
    }
}

/// One generated sample held in memory.
#[derive(Clone, Debug)]
pub struct Sample {
    pub record: ManifestRecord,
    pub image: ImageRGB,
    pub meta: RenderMeta,
}

/// Renders every sample of `spec` without touching the file system.
pub fn generate(spec: &CorpusSpec) -> Result<(Manifest, Vec<Sample>)> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_regimes = spec.regimes.len();
    let plan: Vec<(usize, String, Vec<(usize, ContrastRegime)>, u64)> = (0..spec.count)
        .map(|i| {
            let word = spec.lexicon[master.random_range(0..spec.lexicon.len())].clone();
            let first = spec.regimes[i % n_regimes];
            let split = master.random::<f64>() < spec.split_fraction;
            let other = master.random_range(1..n_regimes.max(2));
            let len = word.chars().count();
            let mut regimes = vec![(0, first)];
            if split && n_regimes > 1 && len > 1 {
                regimes.push((len / 2, spec.regimes[(i + other) % n_regimes]));
            }
            (i, word, regimes, master.next_u64())
        })
        .collect();
    let samples = plan
        .into_par_iter()
        .map(|(i, word, regimes, seed)| {
            let (mut img, mut meta) = render_segments(&word, &regimes, seed, &spec.render)?;
            if let Some(n) = &spec.noise {
                img = apply_noise(&img, n, seed ^ 0x9e37_79b9_7f4a_7c15)?;
            }
            if spec.resolution_scale < 1.0 {
                img = degrade_resolution(&img, spec.resolution_scale)?;
            }
            if img.width() * img.height() == meta.mask.len() {
                meta.contrast = segment_contrasts(&img, &meta.mask, &meta.targets);
            }
            let id = format!("{i:05}");
            Ok(Sample {
                record: ManifestRecord {
                    path: format!("images/{id}.png"),
                    id,
                    text: word,
                    target: meta.targets.clone(),
                    noise: spec.noise,
                    scale: spec.resolution_scale,
                    seed,
                },
                image: img,
                meta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        spec_hash: spec.hash(),
        prng: PRNG_NAME.to_string(),
        records: samples.iter().map(|s| s.record.clone()).collect(),
    };
    Ok((manifest, samples))
}

/// Writes `images/*.png`, `manifest.tsv` and `lexicon.txt` under `out_dir`.
/// The spec is validated before anything is written.
pub fn gen_corpus(spec: &CorpusSpec, out_dir: &Path) -> Result<Manifest> {
    let (manifest, samples) = generate(spec)?;
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    samples
        .par_iter()
        .map(|s| s.image.save_png(&out_dir.join(&s.record.path)))
        .collect::<Result<Vec<_>>>()?;
    let mpath = out_dir.join(MANIFEST_FILE);
    std::fs::write(&mpath, manifest.to_text()).map_err(|e| Error::io(&mpath, e))?;
    let lpath = out_dir.join(LEXICON_FILE);
    let mut lex = spec.lexicon.join("\n");
    lex.push('\n');
    std::fs::write(&lpath, lex).map_err(|e| Error::io(&lpath, e))?;
    Ok(manifest)
}

/// Resolves a record path against the manifest location.
pub fn record_path(manifest_path: &Path, record: &ManifestRecord) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join(&record.path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pairs_isolate_the_target() {
        for r in ContrastRegime::standard_set() {
            let d = r.pair_contrast();
            let t = Channel::ALL.iter().position(|&c| c == r.target).unwrap();
            assert!(d[t] > 40.0, "{:?} {d:?}", r.target);
            let quiet = d.iter().filter(|v| v.abs() < 1.5).count();
            assert!(quiet >= 4, "{:?} {d:?}", r.target);
        }
    }

    #[test]
    fn null_space_is_orthogonal() {
        for c in [Channel::G, Channel::Y, Channel::Cb, Channel::Cr] {
            let a = linear_coefficients(c).unwrap();
            for u in null_space(a) {
                let dot: f64 = (0..3).map(|k| a[k] * u[k]).sum();
                assert!(dot.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn render_is_deterministic() {
        let r = ContrastRegime::standard(Channel::Cr).unwrap();
        let (a, _) = render_word("ABC", &r, 11).unwrap();
        let (b, _) = render_word("ABC", &r, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.height(), 40);
        assert!(matches!(render_word("AbC", &r, 11), Err(Error::UnknownGlyph('b'))));
    }

    #[test]
    fn noise_parsing_and_range() {
        let n: NoiseSpec = "gaussian:15".parse().unwrap();
        assert_eq!(n.kind, NoiseKind::Gaussian);
        assert_eq!(n.to_string(), "gaussian:15");
        assert!(matches!("speckle:31".parse::<NoiseSpec>(), Err(Error::LevelOutOfRange(_))));
    }

    #[test]
    fn resolution_arithmetic() {
        let img = ImageRGB::filled(100, 40, [9, 9, 9]).unwrap();
        assert_eq!(degrade_resolution(&img, 1.0).unwrap(), img);
        assert!(matches!(degrade_resolution(&img, 0.05), Err(Error::DegenerateImage(_))));
    }
}
