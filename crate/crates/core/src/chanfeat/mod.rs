//! Texture descriptors used to decide which color channel to recognize on.
//!
//! Four families (wavelet, Gabor, LBP, LPQ) are computed per channel on the
//! eight selectable channels and concatenated in
//! [`Channel::SELECTABLE`] order. The fifth (moments plus HSV histogram) spans
//! color spaces by construction and is computed once on the RGB patch. The
//! concatenation is L2-normalized as a whole.

pub mod gabor;
pub mod lbp;
pub mod lpq;
pub mod stats;
pub mod wavelet;
pub mod windowed;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imagecore::{Channel, ChannelSet, ImageRGB, Rect};

pub use gabor::gabor_feature;
pub use lbp::lbp_feature;
pub use lpq::lpq_feature;
pub use stats::stats_hist_feature;
pub use wavelet::wavelet_feature;
pub use windowed::region_descriptors;

/// Width of the context patch a per-window selection descriptor is
/// computed on.
pub const CONTEXT_WIDTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Wavelet,
    Gabor,
    Lbp,
    Lpq,
    StatsHist,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Wavelet,
        FeatureKind::Gabor,
        FeatureKind::Lbp,
        FeatureKind::Lpq,
        FeatureKind::StatsHist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Wavelet => "wavelet",
            FeatureKind::Gabor => "gabor",
            FeatureKind::Lbp => "lbp",
            FeatureKind::Lpq => "lpq",
            FeatureKind::StatsHist => "stats",
        }
    }

    /// Length of one channel's block; for `StatsHist` the whole vector.
    pub fn per_channel_len(self) -> usize {
        match self {
            FeatureKind::Wavelet => wavelet::WAVELET_DIMS,
            FeatureKind::Gabor => gabor::GABOR_DIMS,
            FeatureKind::Lbp => lbp::LBP_DIMS,
            FeatureKind::Lpq => lpq::LPQ_DIMS,
            FeatureKind::StatsHist => stats::STATS_DIMS,
        }
    }

    pub fn descriptor_len(self) -> usize {
        match self {
            FeatureKind::StatsHist => stats::STATS_DIMS,
            _ => self.per_channel_len() * Channel::SELECTABLE.len(),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == lower || (lower == "statshist" && *k == FeatureKind::StatsHist))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown feature kind {s:?}; expected wavelet, gabor, lbp, lpq or stats"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionDescriptor {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
    pub per_channel_len: usize,
}

impl SelectionDescriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scales to unit L2 norm; an all-zero vector is returned unchanged.
pub fn l2_normalize(v: &mut [f64]) {
    let n = l2_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Context patch of a sliding window: the window widened symmetrically to
/// [`CONTEXT_WIDTH`] and shifted back inside the image, at full image
/// height. Images narrower than the context start at 0 and are
/// edge-replicated on the right.
pub fn context_region(window: Rect, img_width: usize, img_height: usize) -> Rect {
    let cw = CONTEXT_WIDTH.max(window.width);
    let left = window.center_x().round() as isize - (cw / 2) as isize;
    let max_left = img_width as isize - cw as isize;
    let x = if max_left <= 0 { 0 } else { left.clamp(0, max_left) };
    Rect::new(x, 0, cw, img_height)
}

pub fn whole_region(channels: &ChannelSet) -> Rect {
    Rect::new(0, 0, channels.width(), channels.height())
}

/// Per-plane feature of one family on a single patch.
pub fn plane_feature(kind: FeatureKind, plane: &crate::imagecore::ChannelPlane) -> Result<Vec<f64>> {
    match kind {
        FeatureKind::Wavelet => wavelet_feature(plane),
        FeatureKind::Gabor => gabor_feature(plane),
        FeatureKind::Lbp => lbp_feature(plane),
        FeatureKind::Lpq => lpq_feature(plane),
        FeatureKind::StatsHist => Err(Error::Config(
            "the stats feature is computed on an RGB patch, not a single plane".into(),
        )),
    }
}

/// Region intersected with the image, unless it extends past the right
/// edge of an image narrower than the region (then it is replicated).
fn clamp_region(region: Rect, width: usize, height: usize) -> Rect {
    let x0 = region.x.max(0);
    let y0 = region.y.max(0);
    let x1 = (region.x + region.width as isize).min(width.max(region.width) as isize);
    let y1 = (region.y + region.height as isize).min(height as isize);
    Rect::new(
        x0,
        y0,
        (x1 - x0).max(0) as usize,
        (y1 - y0).max(0) as usize,
    )
}

pub fn selection_descriptor(
    channels: &ChannelSet,
    region: Rect,
    kind: FeatureKind,
) -> Result<SelectionDescriptor> {
    let region = clamp_region(region, channels.width(), channels.height());
    if region.width == 0 || region.height == 0 {
        return Err(Error::PatchTooSmall {
            width: region.width,
            height: region.height,
            min_width: 1,
            min_height: 1,
        });
    }
    let mut values = Vec::with_capacity(kind.descriptor_len());
    match kind {
        FeatureKind::StatsHist => {
            let r = channels.plane(Channel::R).crop_replicate(region);
            let g = channels.plane(Channel::G).crop_replicate(region);
            let b = channels.plane(Channel::B).crop_replicate(region);
            let pixels = r
                .values()
                .iter()
                .zip(g.values())
                .zip(b.values())
                .map(|((&r, &g), &b)| [r as u8, g as u8, b as u8])
                .collect();
            let patch = ImageRGB::new(region.width, region.height, pixels)?;
            values.extend(stats_hist_feature(&patch));
        }
        _ => {
            for channel in Channel::SELECTABLE {
                let patch = channels.plane(channel).crop_replicate(region);
                values.extend(plane_feature(kind, &patch)?);
            }
        }
    }
    l2_normalize(&mut values);
    Ok(SelectionDescriptor {
        kind,
        values,
        per_channel_len: kind.per_channel_len(),
    })
}
