mod common;

use chansel::chanfeat::gabor::gabor_feature;
use chansel::chanfeat::lbp::lbp_feature;
use chansel::chanfeat::lpq::lpq_feature;
use chansel::chanfeat::stats::stats_hist_feature;
use chansel::chanfeat::wavelet::haar_step;
use chansel::chanfeat::{selection_descriptor, whole_region, FeatureKind};
use chansel::imagecore::{normalize_height, rgb_to_ycbcr, to_channel_set, Channel, ChannelPlane, ImageRGB};
use chansel::phogfeat::{extract_sequence, phog_descriptor, sliding_windows, ExtractOptions, SelectionMode, WindowSpec};
use common::*;
use proptest::prelude::*;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn lbp_and_lpq_match_reference_on_odd_sizes() {
    let mut r = rng(11);
    for (w, h) in [(7, 7), (9, 15), (31, 40), (40, 40)] {
        let p = random_plane(&mut r, Channel::S, w, h);
        assert!(max_diff(&lbp_feature(&p).unwrap(), &lbp_oracle(&p)) <= 1e-9);
        assert!(max_diff(&lpq_feature(&p).unwrap(), &lpq_oracle(&p)) <= 1e-9);
    }
}

#[test]
fn stats_match_reference() {
    let mut r = rng(12);
    for (w, h) in [(1, 1), (5, 3), (32, 40)] {
        let img = random_image(&mut r, w, h);
        assert!(max_diff(&stats_hist_feature(&img), &stats_oracle(&img)) <= 1e-9);
    }
}

#[test]
fn gabor_matches_direct_convolution() {
    let mut r = rng(13);
    for (w, h) in [(16, 16), (12, 20)] {
        let p = random_plane(&mut r, Channel::V, w, h);
        let got = gabor_feature(&p).unwrap();
        let want = gabor_oracle(&p);
        for (g, o) in got.iter().zip(&want) {
            assert!((g - o).abs() <= 1e-6 * o.abs().max(1e-12), "{g} vs {o}");
        }
    }
}

#[test]
fn haar_parseval_on_even_sizes() {
    let mut r = rng(14);
    for (w, h) in [(8, 8), (8, 40), (32, 40), (64, 16)] {
        let p = random_plane(&mut r, Channel::R, w, h);
        let (a, b) = haar_energies(p.values(), w, h);
        assert!(rel_close(a, b, 1e-9), "{w}x{h}: {a} vs {b}");
    }
    for (w, h) in [(2, 2), (6, 10), (14, 4)] {
        let p = random_plane(&mut r, Channel::R, w, h);
        let level = haar_step(p.values(), w, h);
        let input: f64 = p.values().iter().map(|v| v * v).sum();
        let bands: f64 = level.bands().iter().flat_map(|b| b.iter()).map(|v| v * v).sum();
        assert!(rel_close(input, bands, 1e-9), "{w}x{h}: {input} vs {bands}");
    }
}

/// Plane cropped at offset `(sx, sy)` from an infinite tiling of `tile`.
fn tiled(tile: &[f64], period: usize, sx: usize, sy: usize, w: usize, h: usize) -> ChannelPlane {
    ChannelPlane::from_fn(Channel::Y, w, h, |x, y| tile[((y + sy) % period) * period + (x + sx) % period]).unwrap()
}

#[test]
fn lbp_lpq_translation_covariant_on_tiled_texture() {
    let mut r = rng(15);
    let period = 4;
    let tile = random_plane(&mut r, Channel::Y, period, period).values().to_vec();
    // Interior regions cover whole periods: LBP drops 1 px per side, LPQ 3.
    let base = lbp_feature(&tiled(&tile, period, 0, 0, 18, 14)).unwrap();
    let lpq_base = lpq_feature(&tiled(&tile, period, 0, 0, 22, 18)).unwrap();
    for (sx, sy) in [(1, 0), (0, 3), (2, 1), (3, 3)] {
        let shifted = lbp_feature(&tiled(&tile, period, sx, sy, 18, 14)).unwrap();
        assert!(max_diff(&base, &shifted) <= 1e-9, "LBP shift ({sx}, {sy})");
        let shifted = lpq_feature(&tiled(&tile, period, sx, sy, 22, 18)).unwrap();
        assert!(max_diff(&lpq_base, &shifted) <= 1e-9, "LPQ shift ({sx}, {sy})");
    }
}

#[test]
fn descriptor_block_order_follows_selectable_channels() {
    let mut r = rng(16);
    let img = random_image(&mut r, 32, 40);
    let cs = to_channel_set(&img);
    let d = selection_descriptor(&cs, whole_region(&cs), FeatureKind::Lbp).unwrap();
    assert_eq!(d.per_channel_len, 59);
    assert_eq!(d.len(), 8 * 59);
    // Each block is an L1-normalized histogram before the global L2 scaling,
    // so block sums are equal and their ratio to the raw histogram is fixed.
    let blocks: Vec<Vec<f64>> = Channel::SELECTABLE.iter().map(|&c| lbp_feature(cs.plane(c)).unwrap()).collect();
    let scale = d.values[..59].iter().sum::<f64>() / blocks[0].iter().sum::<f64>();
    for (k, block) in blocks.iter().enumerate() {
        let got = &d.values[k * 59..(k + 1) * 59];
        for (g, b) in got.iter().zip(block) {
            assert!((g - b * scale).abs() <= 1e-12, "block {k}");
        }
    }
}

#[test]
fn color_conversion_inverts_within_one_level() {
    for r in (0..=255).step_by(15) {
        for g in (0..=255).step_by(17) {
            for b in (0..=255).step_by(51) {
                let (y, cb, cr) = rgb_to_ycbcr(r as f64, g as f64, b as f64);
                let (cb, cr) = (cb - 128.0, cr - 128.0);
                let rr = y + 1.402 * cr;
                let gg = y - 0.344136 * cb - 0.714136 * cr;
                let bb = y + 1.772 * cb;
                assert!((rr - r as f64).abs() <= 1.0 && (gg - g as f64).abs() <= 1.0 && (bb - b as f64).abs() <= 1.0);
            }
        }
    }
}

#[test]
fn gray_pixels_have_zero_hue_and_saturation() {
    for v in [0u8, 1, 77, 128, 254, 255] {
        let cs = to_channel_set(&ImageRGB::filled(3, 2, [v; 3]).unwrap());
        assert!(cs.plane(Channel::H).values().iter().all(|&x| x == 0.0));
        assert!(cs.plane(Channel::S).values().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn normalize_height_is_idempotent_at_target() {
    let mut r = rng(17);
    let img = random_image(&mut r, 23, 40);
    assert_eq!(normalize_height(&img, 40).unwrap(), img);
}

#[test]
fn fixed_mode_needs_no_selector_and_matches_direct_phog() {
    let mut r = rng(18);
    let img = random_image(&mut r, 37, 40);
    let cs = to_channel_set(&img);
    let opts = ExtractOptions::default();
    let seq = extract_sequence(&cs, None, SelectionMode::Fixed(Channel::Cr), &opts).unwrap();
    let rects = sliding_windows(37, 40, &WindowSpec::default(), None);
    assert_eq!(seq.len(), rects.len());
    for (v, rect) in seq.vectors.iter().zip(&rects) {
        let patch = cs.plane(Channel::Cr).crop_replicate(*rect);
        assert_eq!(*v, phog_descriptor(&patch, rect.width, rect.height).unwrap());
    }
    assert!(extract_sequence(&cs, None, SelectionMode::PerWindow, &opts).is_err());
}

fn plane_strategy(w: usize, h: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..255.0, w * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn descriptors_are_unit_or_zero(seed in any::<u64>(), w in 8usize..48, kind_ix in 0usize..5) {
        let mut r = rng(seed);
        let img = random_image(&mut r, w, 40);
        let cs = to_channel_set(&img);
        let kind = FeatureKind::ALL[kind_ix];
        let d = selection_descriptor(&cs, whole_region(&cs), kind).unwrap();
        prop_assert_eq!(d.len(), kind.descriptor_len());
        let n = d.norm();
        prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn phog_ignores_constant_offset(values in plane_strategy(8, 40), offset in 0.0f64..100.0) {
        // Planes clamp to [0, 255], so keep the shifted copy in range.
        let values: Vec<f64> = values.iter().map(|v| v * (155.0 / 255.0)).collect();
        let p = ChannelPlane::new(Channel::G, 8, 40, values.clone()).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + offset).collect();
        let q = ChannelPlane::from_fn(Channel::G, 8, 40, |x, y| shifted[y * 8 + x]).unwrap();
        let a = phog_descriptor(&p, 8, 40).unwrap();
        let b = phog_descriptor(&q, 8, 40).unwrap();
        prop_assert_eq!(a.len(), 168);
        prop_assert!(max_diff(&a, &b) <= 1e-9);
    }

    #[test]
    fn phog_vectors_are_unit_or_zero(seed in any::<u64>(), w in 1usize..60) {
        let mut r = rng(seed);
        let img = random_image(&mut r, w, 40);
        let seq = extract_sequence(&to_channel_set(&img), None, SelectionMode::Fixed(Channel::Y), &ExtractOptions::default()).unwrap();
        prop_assert_eq!(seq.len(), WindowSpec::default().window_count(w));
        for v in &seq.vectors {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(n == 0.0 || (n - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn channel_planes_stay_in_byte_range(seed in any::<u64>(), w in 1usize..20, h in 1usize..20) {
        let mut r = rng(seed);
        let cs = to_channel_set(&random_image(&mut r, w, h));
        prop_assert_eq!(cs.planes().len(), 9);
        for p in cs.planes() {
            prop_assert_eq!((p.width(), p.height()), (w, h));
            prop_assert!(p.values().iter().all(|v| (0.0..=255.0).contains(v)));
        }
    }
}
