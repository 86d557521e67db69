//! Selection descriptors for many regions of one image.
//!
//! Repeated regions are computed once. For the wavelet family, a region
//! whose left edge sits a multiple of 8 columns from some offset `o`, and
//! which spans the full image height, has Haar bands that are exact
//! sub-blocks of the pyramid of columns `o..` of the whole plane. Those
//! pyramids are built once per offset and sliced, which gives the same bits
//! as transforming the cropped patch.

use std::collections::HashMap;

use crate::error::Result;
use crate::imagecore::{ChannelSet, Rect};

use super::wavelet::{haar_decompose, mean_std_rows, HaarLevel, LEVELS, WAVELET_DIMS};
use super::{l2_normalize, selection_descriptor, FeatureKind, SelectionDescriptor};
use crate::imagecore::Channel;

const ALIGN: usize = 1 << LEVELS;

/// Haar pyramids of columns `offset..` of every selectable plane.
struct OffsetPyramids {
    offset: usize,
    planes: Vec<Vec<HaarLevel>>,
}

impl OffsetPyramids {
    fn new(channels: &ChannelSet, offset: usize) -> Self {
        let (w, h) = (channels.width(), channels.height());
        let cols = w - offset;
        let planes = Channel::SELECTABLE
            .iter()
            .map(|&c| {
                let src = channels.plane(c).values();
                let mut values = Vec::with_capacity(cols * h);
                for y in 0..h {
                    values.extend_from_slice(&src[y * w + offset..(y + 1) * w]);
                }
                haar_decompose(&values, cols, h, LEVELS)
            })
            .collect();
        OffsetPyramids { offset, planes }
    }

    fn descriptor(&self, region: Rect) -> SelectionDescriptor {
        let start = region.x as usize - self.offset;
        let mut values = Vec::with_capacity(FeatureKind::Wavelet.descriptor_len());
        for pyramid in &self.planes {
            for (k, level) in pyramid.iter().enumerate() {
                let shift = k + 1;
                let (x0, cols) = (start >> shift, region.width >> shift);
                for band in level.bands() {
                    let (m, s) = mean_std_rows(band, level.width, x0, cols, level.height);
                    values.push(m);
                    values.push(s);
                }
            }
        }
        debug_assert_eq!(values.len(), 8 * WAVELET_DIMS);
        l2_normalize(&mut values);
        SelectionDescriptor {
            kind: FeatureKind::Wavelet,
            values,
            per_channel_len: WAVELET_DIMS,
        }
    }
}

/// Whether `region` can be cut from a shared pyramid.
fn sliceable(region: Rect, channels: &ChannelSet) -> bool {
    region.x >= 0
        && region.y == 0
        && region.height == channels.height()
        && region.height >= ALIGN
        && region.width >= ALIGN
        && region.width % ALIGN == 0
        && region.x as usize + region.width <= channels.width()
}

/// Same result as calling [`selection_descriptor`] on each region.
pub fn region_descriptors(channels: &ChannelSet, regions: &[Rect], kind: FeatureKind) -> Result<Vec<SelectionDescriptor>> {
    let mut done: HashMap<Rect, usize> = HashMap::new();
    let mut pyramids: Vec<OffsetPyramids> = Vec::new();
    let mut out: Vec<SelectionDescriptor> = Vec::with_capacity(regions.len());
    for &region in regions {
        if let Some(&i) = done.get(&region) {
            out.push(out[i].clone());
            continue;
        }
        let d = if kind == FeatureKind::Wavelet && sliceable(region, channels) {
            let offset = region.x as usize % ALIGN;
            let p = match pyramids.iter().position(|p| p.offset == offset) {
                Some(i) => &pyramids[i],
                None => {
                    pyramids.push(OffsetPyramids::new(channels, offset));
                    pyramids.last().expect("just pushed")
                }
            };
            p.descriptor(region)
        } else {
            selection_descriptor(channels, region, kind)?
        };
        done.insert(region, out.len());
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanfeat::context_region;
    use crate::imagecore::{to_channel_set, ImageRGB};

    fn image(w: usize, h: usize, salt: usize) -> ChannelSet {
        let pixels = (0..w * h)
            .map(|i| {
                let v = i.wrapping_mul(2654435761).wrapping_add(salt) >> 7;
                [(v % 251) as u8, (v / 7 % 253) as u8, (v / 13 % 241) as u8]
            })
            .collect();
        to_channel_set(&ImageRGB::new(w, h, pixels).unwrap())
    }

    #[test]
    fn matches_direct_computation_bit_for_bit() {
        for (w, h, salt) in [(100, 40, 1), (37, 40, 2), (32, 40, 3), (20, 40, 4), (61, 35, 5)] {
            let cs = image(w, h, salt);
            let regions: Vec<Rect> = (0..w.saturating_sub(8) / 4 + 1)
                .map(|i| context_region(Rect::new(4 * i as isize, 0, 8, h), w, h))
                .collect();
            for kind in [FeatureKind::Wavelet, FeatureKind::Lpq] {
                let got = region_descriptors(&cs, &regions, kind).unwrap();
                for (d, &r) in got.iter().zip(&regions) {
                    assert_eq!(*d, selection_descriptor(&cs, r, kind).unwrap(), "{w}x{h} {r:?} {kind}");
                }
            }
        }
    }
}
