//! Sliding windows over a height-normalized word image and the PHOG
//! observation sequence fed to the recognizer.

pub mod baseline;
pub mod phog;

use std::fmt;
use std::str::FromStr;

use crate::chanfeat::{context_region, region_descriptors, selection_descriptor, whole_region};
use crate::error::{Error, Result};
use crate::imagecore::{Channel, ChannelSet, Rect, NORMALIZED_HEIGHT};
use crate::mlselect::{select_channel, SelectorModel};

pub use baseline::{baseline_points, fit_baseline, BaselinePoly};
pub use phog::{phog_descriptor, PHOG_DIMS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub height: usize,
    pub width: usize,
    pub stride: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            height: NORMALIZED_HEIGHT,
            width: 8,
            stride: 4,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 2 || self.height < 4 || self.stride * 2 != self.width {
            return Err(Error::Config(format!(
                "window {}x{} with stride {} must have stride = width / 2",
                self.height, self.width, self.stride
            )));
        }
        Ok(())
    }

    /// `floor((W - width) / stride) + 1`, or 1 for images narrower than a
    /// window.
    pub fn window_count(&self, image_width: usize) -> usize {
        if image_width < self.width {
            1
        } else {
            (image_width - self.width) / self.stride + 1
        }
    }
}

/// Window rectangles left to right. With a baseline each window is
/// vertically centered on `f(x_center)`, clamped inside the image.
pub fn sliding_windows(
    img_width: usize,
    img_height: usize,
    spec: &WindowSpec,
    baseline: Option<&BaselinePoly>,
) -> Vec<Rect> {
    let max_top = img_height.saturating_sub(spec.height) as f64;
    (0..spec.window_count(img_width))
        .map(|i| {
            let x = i * spec.stride;
            let y = match baseline {
                Some(poly) => {
                    let cx = x as f64 + spec.width as f64 / 2.0;
                    (poly.eval(cx) - spec.height as f64 / 2.0).round().clamp(0.0, max_top)
                }
                None => 0.0,
            };
            Rect::new(x as isize, y as isize, spec.width, spec.height)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    PerWindow,
    PerImage,
    Fixed(Channel),
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionMode::PerWindow => f.write_str("per-window"),
            SelectionMode::PerImage => f.write_str("per-image"),
            SelectionMode::Fixed(c) => write!(f, "fixed:{c}"),
        }
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-window" | "perwindow" | "window" => Ok(SelectionMode::PerWindow),
            "per-image" | "perimage" | "image" => Ok(SelectionMode::PerImage),
            _ => match s.split_once(':') {
                Some((prefix, ch)) if prefix.eq_ignore_ascii_case("fixed") => {
                    Ok(SelectionMode::Fixed(ch.parse()?))
                }
                _ => Err(Error::Config(format!(
                    "unknown mode {s:?}; expected per-window, per-image or fixed:<channel>"
                ))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSequence {
    pub vectors: Vec<Vec<f64>>,
    pub chosen: Vec<Channel>,
    pub rects: Vec<Rect>,
}

impl ObservationSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// A bare sequence of vectors, for callers outside the image pipeline.
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Self {
        let n = vectors.len();
        ObservationSequence {
            vectors,
            chosen: vec![Channel::Y; n],
            rects: vec![Rect::new(0, 0, 0, 0); n],
        }
    }
}

impl AsRef<[Vec<f64>]> for ObservationSequence {
    fn as_ref(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExtractOptions {
    pub spec: WindowSpec,
    pub baseline: Option<BaselinePoly>,
}

fn require<'a>(selector: Option<&'a SelectorModel>, mode: SelectionMode) -> Result<&'a SelectorModel> {
    selector.ok_or_else(|| Error::Config(format!("mode {mode} needs a trained selector")))
}

/// Channel chosen for every window under `mode`.
pub fn choose_channels(
    channels: &ChannelSet,
    selector: Option<&SelectorModel>,
    mode: SelectionMode,
    rects: &[Rect],
) -> Result<Vec<Channel>> {
    match mode {
        SelectionMode::Fixed(c) => Ok(vec![c; rects.len()]),
        SelectionMode::PerImage => {
            let model = require(selector, mode)?;
            let d = selection_descriptor(channels, whole_region(channels), model.kind)?;
            Ok(vec![select_channel(model, &d)?; rects.len()])
        }
        SelectionMode::PerWindow => {
            let model = require(selector, mode)?;
            let contexts: Vec<Rect> = rects
                .iter()
                .map(|&r| context_region(r, channels.width(), channels.height()))
                .collect();
            region_descriptors(channels, &contexts, model.kind)?
                .iter()
                .map(|d| select_channel(model, d))
                .collect()
        }
    }
}

pub fn extract_sequence(
    channels: &ChannelSet,
    selector: Option<&SelectorModel>,
    mode: SelectionMode,
    opts: &ExtractOptions,
) -> Result<ObservationSequence> {
    let spec = &opts.spec;
    if channels.height() < spec.height {
        return Err(Error::DimensionMismatch {
            expected: spec.height,
            actual: channels.height(),
        });
    }
    let rects = sliding_windows(channels.width(), channels.height(), spec, opts.baseline.as_ref());
    let chosen = choose_channels(channels, selector, mode, &rects)?;
    let vectors = rects
        .iter()
        .zip(&chosen)
        .map(|(&r, &c)| {
            let window = channels.plane(c).crop_replicate(r);
            phog_descriptor(&window, spec.width, spec.height)
        })
        .collect::<Result<_>>()?;
    Ok(ObservationSequence {
        vectors,
        chosen,
        rects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{to_channel_set, ImageRGB};

    #[test]
    fn window_positions() {
        let spec = WindowSpec::default();
        let r = sliding_windows(100, 40, &spec, None);
        assert_eq!(r.len(), 24);
        assert_eq!(r[0].x, 0);
        assert_eq!(r[23].x, 92);
        assert_eq!(sliding_windows(8, 40, &spec, None).len(), 1);
        let narrow = sliding_windows(6, 40, &spec, None);
        assert_eq!(narrow.len(), 1);
        assert_eq!(narrow[0].width, 8);
    }

    #[test]
    fn baseline_centers_windows_in_tall_images() {
        let spec = WindowSpec::default();
        let poly = BaselinePoly {
            coeffs: vec![30.0, 2.0, 0.0],
        };
        let r = sliding_windows(40, 80, &spec, Some(&poly));
        // Center of window 0 is x = 4, f = 38, top = 18.
        assert_eq!(r[0].y, 18);
        assert!(r.iter().all(|w| w.y >= 0 && w.y <= 40));
        assert_eq!(r.last().unwrap().y, 40);
    }

    #[test]
    fn fixed_mode_on_narrow_image() {
        let img = ImageRGB::filled(6, 40, [10, 200, 30]).unwrap();
        let cs = to_channel_set(&img);
        let seq = extract_sequence(&cs, None, SelectionMode::Fixed(Channel::G), &ExtractOptions::default())
            .unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.vectors[0].len(), PHOG_DIMS);
    }

    #[test]
    fn selection_modes_need_a_selector() {
        let cs = to_channel_set(&ImageRGB::filled(20, 40, [1, 2, 3]).unwrap());
        assert!(extract_sequence(&cs, None, SelectionMode::PerWindow, &ExtractOptions::default()).is_err());
    }

    #[test]
    fn parse_modes() {
        assert_eq!("fixed:G".parse::<SelectionMode>().unwrap(), SelectionMode::Fixed(Channel::G));
        assert_eq!("per-window".parse::<SelectionMode>().unwrap(), SelectionMode::PerWindow);
        let err = "fixed:Q".parse::<SelectionMode>().unwrap_err().to_string();
        assert!(err.contains("R, G, B, Y, Cb, Cr, H, S, V"), "{err}");
    }
}
