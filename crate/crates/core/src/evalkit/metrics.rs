//! Multi-label selection metrics and recognition accuracy.

use crate::error::{Error, Result};
use crate::imagecore::Channel;
use crate::mlselect::{ChannelLabelVector, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiLabelReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub n: usize,
}

/// `num / den`, with a zero denominator scoring 0.
fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Sample-averaged Jaccard accuracy, precision and recall over the positive
/// label sets. A sample with both sets empty scores 1 on all three; an empty
/// set facing a nonempty one makes the undefined ratio 0.
pub fn multilabel_metrics(truth: &[ChannelLabelVector], pred: &[ChannelLabelVector]) -> Result<MultiLabelReport> {
    check_lengths(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::InsufficientData("no samples to score".into()));
    }
    let (mut acc, mut prec, mut rec) = (0.0, 0.0, 0.0);
    for (y, z) in truth.iter().zip(pred) {
        let (mut both, mut either, mut ny, mut nz) = (0, 0, 0, 0);
        for k in 0..NUM_CLASSES {
            let (a, b) = (y.is_positive(k), z.is_positive(k));
            both += (a && b) as usize;
            either += (a || b) as usize;
            ny += a as usize;
            nz += b as usize;
        }
        if either == 0 {
            acc += 1.0;
            prec += 1.0;
            rec += 1.0;
            continue;
        }
        acc += ratio(both, either);
        prec += ratio(both, nz);
        rec += ratio(both, ny);
    }
    let n = truth.len() as f64;
    Ok(MultiLabelReport {
        accuracy: acc / n,
        precision: prec / n,
        recall: rec / n,
        n: truth.len(),
    })
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + (ca != cb) as usize;
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `(word accuracy, character accuracy)`; the latter is
/// `1 − Σ edits / Σ |truth|`, floored at 0.
pub fn word_char_accuracy<S: AsRef<str>, T: AsRef<str>>(truth: &[S], hyp: &[T]) -> Result<(f64, f64)> {
    check_lengths(truth.len(), hyp.len())?;
    if truth.is_empty() {
        return Err(Error::InsufficientData("no words to score".into()));
    }
    let mut exact = 0;
    let mut edits = 0;
    let mut chars = 0;
    for (t, h) in truth.iter().zip(hyp) {
        let (t, h) = (t.as_ref(), h.as_ref());
        exact += (t == h) as usize;
        edits += levenshtein(t, h);
        chars += t.chars().count();
    }
    let char_acc = if chars == 0 {
        (edits == 0) as u8 as f64
    } else {
        (1.0 - edits as f64 / chars as f64).max(0.0)
    };
    Ok((exact as f64 / truth.len() as f64, char_acc))
}

/// Fraction of words that at least one channel reads correctly. All nine
/// channels must be present.
pub fn oracle_eval<S: AsRef<str>>(per_channel: &[(Channel, Vec<String>)], truth: &[S]) -> Result<f64> {
    Ok(oracle_hypotheses(per_channel, truth)?.0)
}

/// Oracle word accuracy and, per word, the channel hypothesis closest to the
/// truth (first channel in storage order on ties).
pub fn oracle_hypotheses<S: AsRef<str>>(per_channel: &[(Channel, Vec<String>)], truth: &[S]) -> Result<(f64, Vec<String>)> {
    for c in Channel::ALL {
        if !per_channel.iter().any(|(k, _)| *k == c) {
            return Err(Error::Config(format!("oracle needs hypotheses for channel {c}")));
        }
    }
    for (_, h) in per_channel {
        check_lengths(truth.len(), h.len())?;
    }
    if truth.is_empty() {
        return Err(Error::InsufficientData("no words to score".into()));
    }
    let ordered: Vec<&Vec<String>> = Channel::ALL
        .iter()
        .map(|c| &per_channel.iter().find(|(k, _)| k == c).expect("checked").1)
        .collect();
    let mut correct = 0;
    let mut best = Vec::with_capacity(truth.len());
    for (i, t) in truth.iter().enumerate() {
        let t = t.as_ref();
        let pick = ordered
            .iter()
            .map(|h| &h[i])
            .min_by_key(|h| levenshtein(t, h))
            .expect("nine channels");
        correct += (pick == t) as usize;
        best.push(pick.clone());
    }
    Ok((correct as f64 / truth.len() as f64, best))
}
