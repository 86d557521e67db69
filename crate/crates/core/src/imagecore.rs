//! Word images, color-space conversion and height normalization.
//!
//! Every plane shares the numeric range `[0, 255]`. YCbCr follows full-range
//! BT.601 and HSV the hexcone model with hue rescaled from degrees.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Height every word image is resampled to before windowing.
pub const NORMALIZED_HEIGHT: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    R,
    G,
    B,
    Y,
    Cb,
    Cr,
    H,
    S,
    V,
}

impl Channel {
    /// Storage order of a [`ChannelSet`].
    pub const ALL: [Channel; 9] = [
        Channel::R,
        Channel::G,
        Channel::B,
        Channel::Y,
        Channel::Cb,
        Channel::Cr,
        Channel::H,
        Channel::S,
        Channel::V,
    ];

    /// The eight channels a selector chooses from, in label-vector order.
    /// Cr precedes Cb here, and H is excluded.
    pub const SELECTABLE: [Channel; 8] = [
        Channel::R,
        Channel::G,
        Channel::B,
        Channel::Y,
        Channel::Cr,
        Channel::Cb,
        Channel::S,
        Channel::V,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
            Channel::Y => "Y",
            Channel::Cb => "Cb",
            Channel::Cr => "Cr",
            Channel::H => "H",
            Channel::S => "S",
            Channel::V => "V",
        }
    }

    fn storage_index(self) -> usize {
        self as usize
    }

    /// Position in [`Channel::SELECTABLE`], `None` for H.
    pub fn selectable_index(self) -> Option<usize> {
        Channel::SELECTABLE.iter().position(|&c| c == self)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown channel {s:?}; valid channels are R, G, B, Y, Cb, Cr, H, S, V"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl ImageRGB {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DegenerateImage(format!("{width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(ImageRGB {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Result<Self> {
        ImageRGB::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, px: [u8; 3]) {
        self.pixels[y * self.width + x] = px;
    }

    /// Copies a rectangle, replicating edge pixels for coordinates outside
    /// the image.
    pub fn crop_replicate(&self, rect: Rect) -> ImageRGB {
        let mut pixels = Vec::with_capacity(rect.width * rect.height);
        for y in 0..rect.height {
            let sy = clamp_index(rect.y + y as isize, self.height);
            for x in 0..rect.width {
                let sx = clamp_index(rect.x + x as isize, self.width);
                pixels.push(self.pixels[sy * self.width + sx]);
            }
        }
        ImageRGB {
            width: rect.width,
            height: rect.height,
            pixels,
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut encoder = png::Encoder::new(
            BufWriter::new(file),
            self.width as u32,
            self.height as u32,
        );
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        let data: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        writer
            .write_image_data(&data)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        writer
            .finish()
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }
}

/// Integer rectangle; the origin may lie outside the image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: isize,
    pub y: isize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: isize, y: isize, width: usize, height: usize) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    pub fn center_x(&self) -> f64 {
        self.x as f64 + self.width as f64 / 2.0
    }
}

fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPlane {
    channel: Channel,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ChannelPlane {
    /// Builds a plane, clamping every value into `[0, 255]`.
    pub fn new(channel: Channel, width: usize, height: usize, mut values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DegenerateImage(format!("{width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        for v in &mut values {
            *v = v.clamp(0.0, 255.0);
        }
        Ok(ChannelPlane {
            channel,
            width,
            height,
            values,
        })
    }

    pub fn from_fn(
        channel: Channel,
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        ChannelPlane::new(channel, width, height, values)
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn crop_replicate(&self, rect: Rect) -> ChannelPlane {
        let mut values = Vec::with_capacity(rect.width * rect.height);
        for y in 0..rect.height {
            let sy = clamp_index(rect.y + y as isize, self.height);
            let row = &self.values[sy * self.width..(sy + 1) * self.width];
            for x in 0..rect.width {
                values.push(row[clamp_index(rect.x + x as isize, self.width)]);
            }
        }
        ChannelPlane {
            channel: self.channel,
            width: rect.width,
            height: rect.height,
            values,
        }
    }
}

/// All nine planes of one image, stored in [`Channel::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    width: usize,
    height: usize,
    planes: Vec<ChannelPlane>,
}

impl ChannelSet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, channel: Channel) -> &ChannelPlane {
        &self.planes[channel.storage_index()]
    }

    pub fn planes(&self) -> &[ChannelPlane] {
        &self.planes
    }

    /// The source image, recovered from the R, G and B planes.
    pub fn rgb(&self) -> ImageRGB {
        let (r, g, b) = (
            self.plane(Channel::R).values(),
            self.plane(Channel::G).values(),
            self.plane(Channel::B).values(),
        );
        let pixels = (0..self.width * self.height)
            .map(|i| [r[i] as u8, g[i] as u8, b[i] as u8])
            .collect();
        ImageRGB {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Full-range BT.601 luma and chroma of one pixel, unclamped.
pub fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    (y, cb, cr)
}

/// Hexcone HSV with all three components scaled to `[0, 255]`; gray pixels
/// get hue 0.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max * 255.0 } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else {
        let sector = if max == r {
            ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        };
        sector * 60.0 * 255.0 / 360.0
    };
    (h, s, v)
}

pub fn to_channel_set(img: &ImageRGB) -> ChannelSet {
    let n = img.width * img.height;
    let mut data: Vec<Vec<f64>> = (0..9).map(|_| Vec::with_capacity(n)).collect();
    for &[r, g, b] in &img.pixels {
        let (r, g, b) = (r as f64, g as f64, b as f64);
        let (y, cb, cr) = rgb_to_ycbcr(r, g, b);
        let (h, s, v) = rgb_to_hsv(r, g, b);
        for (i, value) in [r, g, b, y, cb, cr, h, s, v].into_iter().enumerate() {
            data[i].push(value.clamp(0.0, 255.0));
        }
    }
    let planes = Channel::ALL
        .iter()
        .zip(data)
        .map(|(&channel, values)| ChannelPlane {
            channel,
            width: img.width,
            height: img.height,
            values,
        })
        .collect();
    ChannelSet {
        width: img.width,
        height: img.height,
        planes,
    }
}

/// Output size of a height normalization: aspect ratio kept, width rounded
/// and at least 1.
pub fn normalized_dims(width: usize, height: usize, target_h: usize) -> (usize, usize) {
    let w = (width as f64 * target_h as f64 / height as f64).round().max(1.0) as usize;
    (w, target_h)
}

/// Triangle-filter taps for one axis, pixel-center aligned: `(first source
/// index, weights)` per output sample. When shrinking, the triangle is
/// widened by the reduction factor so every source sample contributes;
/// when enlarging it is plain two-tap linear interpolation.
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = src_len as f64 / dst_len as f64;
    let support = scale.max(1.0);
    (0..dst_len)
        .map(|d| {
            let center = (d as f64 + 0.5) * scale;
            if support == 1.0 {
                let s = (center - 0.5).clamp(0.0, (src_len - 1) as f64);
                let i0 = s.floor() as usize;
                let t = s - i0 as f64;
                return if i0 + 1 < src_len { (i0, vec![1.0 - t, t]) } else { (i0, vec![1.0]) };
            }
            let lo = (center - support).floor().max(0.0) as usize;
            let hi = ((center + support).ceil() as usize).min(src_len);
            let mut w: Vec<f64> = (lo..hi)
                .map(|i| (1.0 - ((i as f64 + 0.5 - center) / support).abs()).max(0.0))
                .collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            (lo, w)
        })
        .collect()
}

fn apply_taps(src: &[f64], stride: usize, taps: &(usize, Vec<f64>)) -> f64 {
    let (start, w) = taps;
    w.iter().enumerate().map(|(k, wk)| wk * src[(start + k) * stride]).sum()
}

/// Separable bilinear resize of row-major samples, antialiased when
/// shrinking.
pub fn resize_bilinear(
    values: &[f64],
    width: usize,
    height: usize,
    new_width: usize,
    new_height: usize,
) -> Vec<f64> {
    if width == new_width && height == new_height {
        return values.to_vec();
    }
    let xt = axis_taps(width, new_width);
    let yt = axis_taps(height, new_height);
    let mut rows = Vec::with_capacity(new_width * height);
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        rows.extend(xt.iter().map(|t| apply_taps(row, 1, t)));
    }
    let mut out = Vec::with_capacity(new_width * new_height);
    for t in &yt {
        out.extend((0..new_width).map(|x| apply_taps(&rows[x..], new_width, t)));
    }
    out
}

/// Anything that can be resampled to a normalized height.
pub trait Resample: Sized {
    fn dims(&self) -> (usize, usize);
    fn resize(&self, width: usize, height: usize) -> Self;
}

impl Resample for ChannelPlane {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn resize(&self, width: usize, height: usize) -> Self {
        let values = resize_bilinear(&self.values, self.width, self.height, width, height);
        ChannelPlane {
            channel: self.channel,
            width,
            height,
            values: values.into_iter().map(|v| v.clamp(0.0, 255.0)).collect(),
        }
    }
}

impl Resample for ImageRGB {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn resize(&self, width: usize, height: usize) -> Self {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let planes: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                let src: Vec<f64> = self.pixels.iter().map(|p| p[c] as f64).collect();
                resize_bilinear(&src, self.width, self.height, width, height)
            })
            .collect();
        let pixels = (0..width * height)
            .map(|i| {
                let q = |c: usize| planes[c][i].round().clamp(0.0, 255.0) as u8;
                [q(0), q(1), q(2)]
            })
            .collect();
        ImageRGB {
            width,
            height,
            pixels,
        }
    }
}

/// Resamples to `target_h` rows, preserving aspect ratio.
pub fn normalize_height<T: Resample>(src: &T, target_h: usize) -> Result<T> {
    if target_h < 8 {
        return Err(Error::Config(format!("target height {target_h} below 8")));
    }
    let (w, h) = src.dims();
    if h == 0 || w == 0 {
        return Err(Error::DegenerateImage(format!("{w}x{h}")));
    }
    let (nw, nh) = normalized_dims(w, h, target_h);
    Ok(src.resize(nw, nh))
}

pub fn load_image(path: &Path) -> Result<ImageRGB> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let what = path.display().to_string();
    if bytes.starts_with(b"P6") {
        decode_ppm(&bytes).map_err(|reason| Error::format(what, reason))
    } else if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        decode_png(&bytes).map_err(|reason| Error::format(what, reason))
    } else {
        Err(Error::format(what, "not a PNG or binary PPM file"))
    }
}

fn decode_png(bytes: &[u8]) -> std::result::Result<ImageRGB, String> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_string())?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let data = &buf[..info.buffer_size()];
    let stride = info.line_size;
    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        let row = &data[y * stride..];
        for x in 0..width {
            let p = &row[x * channels..];
            pixels.push(match info.color_type {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => [p[0], p[0], p[0]],
                _ => [p[0], p[1], p[2]],
            });
        }
    }
    ImageRGB::new(width, height, pixels).map_err(|e| e.to_string())
}

fn decode_ppm(bytes: &[u8]) -> std::result::Result<ImageRGB, String> {
    let mut pos = 2;
    let mut header = [0usize; 3];
    for field in header.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("malformed header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed header number")?;
    }
    let [width, height, maxval] = header;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after header".into());
    }
    pos += 1;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("invalid maxval {maxval}"));
    }
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let needed = width * height * 3 * sample_bytes;
    let data = bytes
        .get(pos..pos + needed)
        .ok_or_else(|| format!("truncated pixel data: need {needed} bytes"))?;
    let sample = |i: usize| -> u8 {
        let raw = if sample_bytes == 1 {
            data[i] as usize
        } else {
            (data[2 * i] as usize) << 8 | data[2 * i + 1] as usize
        };
        if maxval == 255 {
            raw as u8
        } else {
            ((raw.min(maxval) * 255 + maxval / 2) / maxval) as u8
        }
    };
    let pixels = (0..width * height)
        .map(|i| [sample(3 * i), sample(3 * i + 1), sample(3 * i + 2)])
        .collect();
    ImageRGB::new(width, height, pixels).map_err(|e| e.to_string())
}
