//! End-to-end glue: corpus items, channel labeling, selector and HMM
//! training, and recognition under each selection mode.

use std::path::Path;

use rayon::prelude::*;

use crate::chanfeat::{context_region, selection_descriptor, whole_region, FeatureKind};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::hmmrec::{recognize_word, train_embedded, Lexicon, ModelSet, RecognitionResult, TrainReport};
use crate::imagecore::{load_image, normalize_height, to_channel_set, Channel, ChannelSet, ImageRGB, NORMALIZED_HEIGHT};
use crate::mlselect::{auto_label, train_ova_svm, ChannelLabelVector, LabeledCorpusEntry, SelectorModel};
use crate::phogfeat::{extract_sequence, sliding_windows, ExtractOptions, ObservationSequence, SelectionMode};
use crate::synthgen::{record_path, Manifest, Sample, TargetMap};

/// A height-normalized word image with its transcript.
#[derive(Clone, Debug)]
pub struct Item {
    pub id: String,
    pub text: String,
    /// Generation-time target channels, when known.
    pub target: Option<TargetMap>,
    pub image: ImageRGB,
    pub channels: ChannelSet,
}

impl Item {
    pub fn new(id: impl Into<String>, text: impl Into<String>, target: Option<TargetMap>, img: &ImageRGB) -> Result<Self> {
        let image = normalize_height(img, NORMALIZED_HEIGHT)?;
        let channels = to_channel_set(&image);
        Ok(Item {
            id: id.into(),
            text: text.into(),
            target,
            image,
            channels,
        })
    }

    /// Same item with a replacement image.
    pub fn with_image(&self, img: &ImageRGB) -> Result<Self> {
        Item::new(self.id.clone(), self.text.clone(), self.target.clone(), img)
    }
}

pub fn load_corpus(manifest_path: &Path) -> Result<(Manifest, Vec<Item>)> {
    let manifest = Manifest::load(manifest_path)?;
    let items = manifest
        .records
        .par_iter()
        .map(|r| {
            let img = load_image(&record_path(manifest_path, r))?;
            Item::new(r.id.clone(), r.text.clone(), Some(r.target.clone()), &img)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, items))
}

pub fn items_from_samples(samples: &[Sample]) -> Result<Vec<Item>> {
    samples
        .par_iter()
        .map(|s| Item::new(s.record.id.clone(), s.record.text.clone(), Some(s.record.target.clone()), &s.image))
        .collect()
}

/// Item `i` is held out iff `i % holdout == holdout − 1`.
pub fn split<T>(items: &[T], holdout: usize) -> (Vec<&T>, Vec<&T>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, it) in items.iter().enumerate() {
        if i % holdout == holdout - 1 {
            test.push(it);
        } else {
            train.push(it);
        }
    }
    (train, test)
}

pub fn extract_all(
    items: &[&Item],
    selector: Option<&SelectorModel>,
    mode: SelectionMode,
    opts: &ExtractOptions,
) -> Result<Vec<ObservationSequence>> {
    items
        .par_iter()
        .map(|it| extract_sequence(&it.channels, selector, mode, opts))
        .collect()
}

pub fn train_models<S: AsRef<[Vec<f64>]> + Sync>(
    seqs: &[S],
    texts: &[&str],
    cfg: &PipelineConfig,
) -> Result<(ModelSet, TrainReport)> {
    if seqs.len() != texts.len() {
        return Err(Error::LengthMismatch {
            left: seqs.len(),
            right: texts.len(),
        });
    }
    let corpus: Vec<(&[Vec<f64>], &str)> = seqs.iter().map(|s| s.as_ref()).zip(texts.iter().copied()).collect();
    train_embedded(&corpus, &cfg.charset, &cfg.hmm)
}

pub fn recognize_all<S: AsRef<[Vec<f64>]> + Sync>(
    models: &ModelSet,
    lexicon: &Lexicon,
    seqs: &[S],
) -> Result<Vec<RecognitionResult>> {
    seqs.par_iter()
        .map(|s| recognize_word(models, lexicon, s.as_ref()))
        .collect()
}

pub fn top1(results: &[RecognitionResult]) -> Vec<String> {
    results.iter().map(|r| r.best().to_string()).collect()
}

fn texts<'a>(items: &[&'a Item]) -> Vec<&'a str> {
    items.iter().map(|it| it.text.as_str()).collect()
}

/// Fixed-channel sequences of every item for each of the nine channels.
pub fn fixed_sequences(items: &[&Item], opts: &ExtractOptions) -> Result<Vec<(Channel, Vec<ObservationSequence>)>> {
    Channel::ALL
        .iter()
        .map(|&c| Ok((c, extract_all(items, None, SelectionMode::Fixed(c), opts)?)))
        .collect()
}

/// Cross-validated channel labels for `items`.
pub fn label_items(items: &[&Item], lexicon: &Lexicon, cfg: &PipelineConfig) -> Result<Vec<ChannelLabelVector>> {
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    let per_channel = fixed_sequences(items, &opts)?;
    let all_texts = texts(items);
    let recognizer = |channel: Channel, train: &[usize], test: &[usize]| -> Result<Vec<String>> {
        let seqs = &per_channel
            .iter()
            .find(|(c, _)| *c == channel)
            .expect("all channels extracted")
            .1;
        let tr: Vec<&ObservationSequence> = train.iter().map(|&i| &seqs[i]).collect();
        let tt: Vec<&str> = train.iter().map(|&i| all_texts[i]).collect();
        let (models, _) = train_models(&tr, &tt, cfg)?;
        let te: Vec<&ObservationSequence> = test.iter().map(|&i| &seqs[i]).collect();
        Ok(top1(&recognize_all(&models, lexicon, &te)?))
    };
    let truth: Vec<String> = all_texts.iter().map(|s| s.to_string()).collect();
    auto_label(&truth, &recognizer, cfg.folds)
}

/// Selector training rows: one whole-image row per item plus one context
/// row for every `step`-th window, all carrying the item's labels.
pub fn selector_rows(
    items: &[&Item],
    labels: &[ChannelLabelVector],
    kind: FeatureKind,
    cfg: &PipelineConfig,
) -> Result<Vec<LabeledCorpusEntry>> {
    if items.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: items.len(),
            right: labels.len(),
        });
    }
    let per_item: Vec<Vec<LabeledCorpusEntry>> = items
        .par_iter()
        .zip(labels.par_iter())
        .map(|(it, &lab)| {
            let cs = &it.channels;
            let mut rows = vec![LabeledCorpusEntry {
                id: it.id.clone(),
                descriptor: selection_descriptor(cs, whole_region(cs), kind)?,
                labels: lab,
            }];
            let windows = sliding_windows(cs.width(), cs.height(), &cfg.window, None);
            for (w, r) in windows.iter().enumerate().step_by(cfg.selector_window_step) {
                rows.push(LabeledCorpusEntry {
                    id: format!("{}#{w}", it.id),
                    descriptor: selection_descriptor(cs, context_region(*r, cs.width(), cs.height()), kind)?,
                    labels: lab,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_item.into_iter().flatten().collect())
}

pub fn train_selector(
    items: &[&Item],
    labels: &[ChannelLabelVector],
    kind: FeatureKind,
    cfg: &PipelineConfig,
) -> Result<SelectorModel> {
    train_ova_svm(&selector_rows(items, labels, kind, cfg)?, cfg.svm_c)
}

/// Per-channel recognizers and the cross-validated labels of the training
/// items.
pub struct BaseSystem {
    pub fixed: Vec<(Channel, ModelSet)>,
    pub labels: Vec<ChannelLabelVector>,
    pub reports: Vec<(Channel, TrainReport)>,
}

impl BaseSystem {
    pub fn fixed_models(&self, channel: Channel) -> &ModelSet {
        &self.fixed.iter().find(|(c, _)| *c == channel).expect("all channels trained").1
    }
}

pub fn train_base(train: &[&Item], lexicon: &Lexicon, cfg: &PipelineConfig) -> Result<BaseSystem> {
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    let labels = label_items(train, lexicon, cfg)?;
    let tt = texts(train);
    let mut fixed = Vec::new();
    let mut reports = Vec::new();
    for (c, seqs) in fixed_sequences(train, &opts)? {
        let (m, r) = train_models(&seqs, &tt, cfg)?;
        fixed.push((c, m));
        reports.push((c, r));
    }
    Ok(BaseSystem { fixed, labels, reports })
}

/// A selector and the recognizers trained on its per-image and per-window
/// selections.
pub struct SelectionSystem {
    pub selector: SelectorModel,
    pub per_image: ModelSet,
    pub per_window: ModelSet,
}

impl SelectionSystem {
    pub fn models(&self, mode: SelectionMode) -> Option<&ModelSet> {
        match mode {
            SelectionMode::PerImage => Some(&self.per_image),
            SelectionMode::PerWindow => Some(&self.per_window),
            SelectionMode::Fixed(_) => None,
        }
    }
}

pub fn train_selection(
    train: &[&Item],
    labels: &[ChannelLabelVector],
    kind: FeatureKind,
    cfg: &PipelineConfig,
) -> Result<SelectionSystem> {
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    let selector = train_selector(train, labels, kind, cfg)?;
    let tt = texts(train);
    let seqs = extract_all(train, Some(&selector), SelectionMode::PerImage, &opts)?;
    let (per_image, _) = train_models(&seqs, &tt, cfg)?;
    let seqs = extract_all(train, Some(&selector), SelectionMode::PerWindow, &opts)?;
    let (per_window, _) = train_models(&seqs, &tt, cfg)?;
    Ok(SelectionSystem {
        selector,
        per_image,
        per_window,
    })
}

/// Hypotheses and the per-window channel choices of every item.
pub struct ModeOutput {
    pub hypotheses: Vec<String>,
    pub chosen: Vec<Vec<Channel>>,
}

pub fn run_mode(
    items: &[&Item],
    models: &ModelSet,
    selector: Option<&SelectorModel>,
    mode: SelectionMode,
    lexicon: &Lexicon,
    cfg: &PipelineConfig,
) -> Result<ModeOutput> {
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    let seqs = extract_all(items, selector, mode, &opts)?;
    let hyps = top1(&recognize_all(models, lexicon, &seqs)?);
    Ok(ModeOutput {
        hypotheses: hyps,
        chosen: seqs.into_iter().map(|s| s.chosen).collect(),
    })
}
