//! Character HMMs with GMM emissions, embedded training and
//! lexicon-constrained recognition.

pub mod decode;
pub mod gmm;
pub mod model;
pub mod train;

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use decode::{forward_log, viterbi_log};
pub use gmm::{log_sum_exp, GaussianComponent, Gmm, VARIANCE_FLOOR};
pub use model::{concat_word_model, CharacterModel, HmmState, ModelSet, WordModel};
pub use train::{train_embedded, IterationRecord, TrainOptions, TrainReport};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<String>,
}

impl Lexicon {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok(Lexicon { entries })
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every character must have a model.
    pub fn check(&self, models: &ModelSet) -> Result<()> {
        for w in &self.entries {
            for c in w.chars() {
                models.model_index(c)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecognitionResult {
    /// Ranked by descending log-likelihood; impossible entries last.
    pub hypotheses: Vec<(String, f64)>,
    /// Chain position per frame for the top hypothesis.
    pub path: Vec<usize>,
}

impl RecognitionResult {
    pub fn best(&self) -> &str {
        &self.hypotheses[0].0
    }

    pub fn best_score(&self) -> f64 {
        self.hypotheses[0].1
    }
}

fn check_sequence(dim: usize, seq: &[Vec<f64>]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    for f in seq {
        if f.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
    }
    Ok(())
}

/// `emit[t][j]` for every frame and chain position of `model`.
pub fn word_emissions(model: &WordModel, seq: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = model.states.first().map_or(0, |s| s.gmm.dim());
    check_sequence(dim, seq)?;
    let prepared: Vec<_> = model.states.iter().map(|s| s.gmm.prepared()).collect();
    Ok(seq
        .iter()
        .map(|f| prepared.iter().map(|p| p.log_density(f)).collect())
        .collect())
}

pub fn forward_log_likelihood(model: &WordModel, seq: &[Vec<f64>]) -> Result<f64> {
    let emit = word_emissions(model, seq)?;
    Ok(forward_log(&emit, &model.log_self(), &model.log_next()))
}

/// Best path score and chain positions; `(−∞, [])` when no path fits.
pub fn viterbi(model: &WordModel, seq: &[Vec<f64>]) -> Result<(f64, Vec<usize>)> {
    let emit = word_emissions(model, seq)?;
    Ok(viterbi_log(&emit, &model.log_self(), &model.log_next())
        .unwrap_or((f64::NEG_INFINITY, Vec::new())))
}

/// Scores every lexicon entry with Viterbi. Emissions are computed once per
/// character state and shared across entries.
pub fn recognize_word(models: &ModelSet, lexicon: &Lexicon, seq: &[Vec<f64>]) -> Result<RecognitionResult> {
    check_sequence(models.dim, seq)?;
    lexicon.check(models)?;
    let states = models.states_per_model();
    let cache: Vec<Vec<f64>> = models
        .models
        .par_iter()
        .flat_map_iter(|m| m.states.iter())
        .map(|s| {
            let p = s.gmm.prepared();
            seq.iter().map(|f| p.log_density(f)).collect()
        })
        .collect();

    let scored: Vec<(f64, Option<Vec<usize>>)> = lexicon
        .entries
        .par_iter()
        .map(|w| {
            let chain = concat_word_model(models, w)?;
            if chain.is_empty() || chain.len() > seq.len() {
                return Ok((f64::NEG_INFINITY, None));
            }
            let emit: Vec<Vec<f64>> = (0..seq.len())
                .map(|t| {
                    chain
                        .origin
                        .iter()
                        .map(|&(mi, si)| cache[mi * states + si][t])
                        .collect()
                })
                .collect();
            Ok(match viterbi_log(&emit, &chain.log_self(), &chain.log_next()) {
                Some((s, p)) => (s, Some(p)),
                None => (f64::NEG_INFINITY, None),
            })
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let path = scored[order[0]].1.clone().unwrap_or_else(|| vec![0; seq.len()]);
    Ok(RecognitionResult {
        hypotheses: order
            .iter()
            .map(|&i| (lexicon.entries[i].clone(), scored[i].0))
            .collect(),
        path,
    })
}
