//! Automatic channel labels from cross-validated fixed-channel recognition.

use crate::error::{Error, Result};
use crate::imagecore::Channel;

use super::{ChannelLabelVector, NUM_CLASSES};

/// Trains a recognizer for one channel on the `train` items and returns its
/// top-1 transcription for each `test` item, in order.
pub trait FoldRecognizer {
    fn recognize_fold(&self, channel: Channel, train: &[usize], test: &[usize]) -> Result<Vec<String>>;
}

impl<F> FoldRecognizer for F
where
    F: Fn(Channel, &[usize], &[usize]) -> Result<Vec<String>>,
{
    fn recognize_fold(&self, channel: Channel, train: &[usize], test: &[usize]) -> Result<Vec<String>> {
        self(channel, train, test)
    }
}

/// Item `i` belongs to fold `i % folds`.
pub fn fold_split(n: usize, folds: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..n).partition(|&i| i % folds != fold)
}

/// Labels entry `k` of item `i` `+1` iff the recognizer trained on the other
/// folds reproduces `truth[i]` exactly on channel `k`.
pub fn auto_label<R: FoldRecognizer + ?Sized>(
    truth: &[String],
    recognizer: &R,
    folds: usize,
) -> Result<Vec<ChannelLabelVector>> {
    if folds < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 folds, got {folds}")));
    }
    if truth.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} items cannot fill {folds} folds",
            truth.len()
        )));
    }
    let mut bits = vec![[-1i8; NUM_CLASSES]; truth.len()];
    for (k, &channel) in Channel::SELECTABLE.iter().enumerate() {
        for fold in 0..folds {
            let (train, test) = fold_split(truth.len(), folds, fold);
            let hyps = recognizer.recognize_fold(channel, &train, &test)?;
            if hyps.len() != test.len() {
                return Err(Error::LengthMismatch {
                    left: test.len(),
                    right: hyps.len(),
                });
            }
            for (&i, hyp) in test.iter().zip(&hyps) {
                if *hyp == truth[i] {
                    bits[i][k] = 1;
                }
            }
        }
    }
    bits.into_iter().map(ChannelLabelVector::new).collect()
}
