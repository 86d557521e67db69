//! Multi-label channel selection: one linear SVM per selectable channel,
//! trained one-vs-all, with the most confident positive channel selected.

pub mod label;
pub mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chanfeat::{FeatureKind, SelectionDescriptor};
use crate::error::{Error, Result};
use crate::imagecore::Channel;
use crate::textfmt::{fmt_f64, Reader, Writer};

pub use label::{auto_label, FoldRecognizer};
pub use svm::primal_objective;

pub const NUM_CLASSES: usize = 8;

/// One ±1 entry per selectable channel, in [`Channel::SELECTABLE`] order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChannelLabelVector([i8; NUM_CLASSES]);

impl ChannelLabelVector {
    pub fn new(bits: [i8; NUM_CLASSES]) -> Result<Self> {
        if bits.iter().any(|&b| b != 1 && b != -1) {
            return Err(Error::Config(format!("label entries must be ±1, got {bits:?}")));
        }
        Ok(ChannelLabelVector(bits))
    }

    pub fn all_negative() -> Self {
        ChannelLabelVector([-1; NUM_CLASSES])
    }

    pub fn from_positive(channels: &[Channel]) -> Self {
        let mut bits = [-1; NUM_CLASSES];
        for c in channels {
            if let Some(i) = c.selectable_index() {
                bits[i] = 1;
            }
        }
        ChannelLabelVector(bits)
    }

    pub fn bits(&self) -> [i8; NUM_CLASSES] {
        self.0
    }

    pub fn get(&self, k: usize) -> i8 {
        self.0[k]
    }

    pub fn is_positive(&self, k: usize) -> bool {
        self.0[k] > 0
    }

    pub fn positives(&self) -> Vec<Channel> {
        (0..NUM_CLASSES)
            .filter(|&k| self.is_positive(k))
            .map(|k| Channel::SELECTABLE[k])
            .collect()
    }
}

impl fmt::Display for ChannelLabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|&b| if b > 0 { "+1" } else { "-1" }).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for ChannelLabelVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed: Vec<i8> = s
            .split_whitespace()
            .map(|t| match t {
                "+1" | "1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(Error::parse("label vector", format!("bad entry {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let bits: [i8; NUM_CLASSES] = parsed
            .try_into()
            .map_err(|v: Vec<i8>| Error::parse("label vector", format!("{} entries, need 8", v.len())))?;
        ChannelLabelVector::new(bits)
    }
}

#[derive(Clone, Debug)]
pub struct LabeledCorpusEntry {
    pub id: String,
    pub descriptor: SelectionDescriptor,
    pub labels: ChannelLabelVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearClassifier {
    pub channel: Channel,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Set when training saw only one label for this class; the classifier
    /// then outputs that label as a constant.
    pub constant: bool,
}

impl LinearClassifier {
    pub fn decision(&self, x: &[f64]) -> f64 {
        svm::dot(&self.weights, x) + self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectorModel {
    pub kind: FeatureKind,
    pub dims: usize,
    pub c: f64,
    pub classifiers: Vec<LinearClassifier>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: ChannelLabelVector,
    pub scores: [f64; NUM_CLASSES],
    pub confidences: [f64; NUM_CLASSES],
}

pub fn train_ova_svm(data: &[LabeledCorpusEntry], c: f64) -> Result<SelectorModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("SVM cost C must be positive, got {c}")));
    }
    let first = data
        .first()
        .ok_or_else(|| Error::InsufficientData("no training rows".into()))?;
    let kind = first.descriptor.kind;
    let dims = first.descriptor.len();
    for (i, e) in data.iter().enumerate() {
        if e.descriptor.kind != kind {
            return Err(Error::Config(format!(
                "row {i} has feature kind {}, corpus uses {kind}",
                e.descriptor.kind
            )));
        }
        if e.descriptor.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: e.descriptor.len(),
            });
        }
        if e.descriptor.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
    }
    let rows: Vec<&[f64]> = data.iter().map(|e| e.descriptor.values.as_slice()).collect();
    let gram = svm::Gram::new(&rows);
    let classifiers = (0..NUM_CLASSES)
        .into_par_iter()
        .map(|k| {
            let labels: Vec<f64> = data.iter().map(|e| e.labels.get(k) as f64).collect();
            let channel = Channel::SELECTABLE[k];
            let has_pos = labels.iter().any(|&l| l > 0.0);
            let has_neg = labels.iter().any(|&l| l < 0.0);
            if !(has_pos && has_neg) {
                return LinearClassifier {
                    channel,
                    weights: vec![0.0; dims],
                    bias: if has_pos { 1.0 } else { -1.0 },
                    constant: true,
                };
            }
            let m = svm::train_binary(&gram, &labels, c);
            LinearClassifier {
                channel,
                weights: m.weights,
                bias: m.bias,
                constant: false,
            }
        })
        .collect();
    Ok(SelectorModel {
        kind,
        dims,
        c,
        classifiers,
    })
}

impl SelectorModel {
    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn scores(&self, x: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        self.check(x)?;
        let mut f = [0.0; NUM_CLASSES];
        for (k, clf) in self.classifiers.iter().enumerate() {
            f[k] = clf.decision(x);
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Writer::new();
        w.line(&["chansel-selector", "1"]);
        w.line(&["feature_kind", self.kind.name()]);
        w.line(&["dims", &self.dims.to_string()]);
        let order: Vec<&str> = Channel::SELECTABLE.iter().map(|c| c.name()).collect();
        w.line(&["channel_order", &order.join(",")]);
        w.line(&["C", &fmt_f64(self.c)]);
        for clf in &self.classifiers {
            w.line(&["classifier", clf.channel.name()]);
            w.line(&["constant", if clf.constant { "true" } else { "false" }]);
            w.line(&["bias", &fmt_f64(clf.bias)]);
            w.floats("weights", &clf.weights);
        }
        w.write_to(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = Reader::open(path)?;
        r.expect_header("chansel-selector", "1")?;
        let kind: FeatureKind = r.value("feature_kind")?.parse()?;
        let dims: usize = r.parsed("dims")?;
        if dims != kind.descriptor_len() {
            return Err(r.error(format!("dims {dims} inconsistent with feature kind {kind}")));
        }
        let order = r.value("channel_order")?;
        let expected: Vec<&str> = Channel::SELECTABLE.iter().map(|c| c.name()).collect();
        if order != expected.join(",") {
            return Err(r.error(format!("unsupported channel order {order}")));
        }
        let c: f64 = r.parsed("C")?;
        let mut classifiers = Vec::with_capacity(NUM_CLASSES);
        for expected in Channel::SELECTABLE {
            let channel: Channel = r.value("classifier")?.parse()?;
            if channel != expected {
                return Err(r.error(format!("expected classifier {expected}, found {channel}")));
            }
            let constant = r.parsed::<bool>("constant")?;
            let bias = r.parsed("bias")?;
            let weights = r.floats("weights", dims)?;
            classifiers.push(LinearClassifier {
                channel,
                weights,
                bias,
                constant,
            });
        }
        r.expect_end()?;
        Ok(SelectorModel {
            kind,
            dims,
            c,
            classifiers,
        })
    }
}

/// Sign of each decision value (zero counts as negative) and its magnitude.
pub fn predict(model: &SelectorModel, x: &SelectionDescriptor) -> Result<Prediction> {
    let scores = model.scores(&x.values)?;
    let mut bits = [-1i8; NUM_CLASSES];
    let mut confidences = [0.0; NUM_CLASSES];
    for k in 0..NUM_CLASSES {
        if scores[k] > 0.0 {
            bits[k] = 1;
        }
        confidences[k] = scores[k].abs();
    }
    Ok(Prediction {
        labels: ChannelLabelVector(bits),
        scores,
        confidences,
    })
}

/// Highest-scoring positive class, or the highest-scoring class overall when
/// none is positive. Ties go to the lower channel index.
pub fn select_from_scores(scores: &[f64; NUM_CLASSES]) -> Channel {
    let any_positive = scores.iter().any(|&f| f > 0.0);
    let mut best: Option<usize> = None;
    for (k, &f) in scores.iter().enumerate() {
        if any_positive && f <= 0.0 {
            continue;
        }
        if best.is_none_or(|b| f > scores[b]) {
            best = Some(k);
        }
    }
    Channel::SELECTABLE[best.unwrap_or(0)]
}

pub fn select_channel(model: &SelectorModel, x: &SelectionDescriptor) -> Result<Channel> {
    Ok(select_from_scores(&model.scores(&x.values)?))
}
