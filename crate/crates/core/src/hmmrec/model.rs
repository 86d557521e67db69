//! Left-to-right character models, word models built by concatenation, and
//! the model file format.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textfmt::{fmt_f64, Reader, Writer};

use super::gmm::{GaussianComponent, Gmm, VARIANCE_FLOOR};

/// One emitting state. The remaining `1 − self_prob` leaves to the next
/// state, or out of the character from its last state.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmState {
    pub gmm: Gmm,
    pub self_prob: f64,
}

impl HmmState {
    pub fn next_prob(&self) -> f64 {
        1.0 - self.self_prob
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterModel {
    pub symbol: char,
    pub states: Vec<HmmState>,
}

/// Character models for a whole charset, indexed by symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSet {
    pub dim: usize,
    pub gaussians: usize,
    pub models: Vec<CharacterModel>,
    index: HashMap<char, usize>,
}

impl ModelSet {
    pub fn new(dim: usize, gaussians: usize, models: Vec<CharacterModel>) -> Self {
        let index = models.iter().enumerate().map(|(i, m)| (m.symbol, i)).collect();
        ModelSet {
            dim,
            gaussians,
            models,
            index,
        }
    }

    pub fn charset(&self) -> String {
        self.models.iter().map(|m| m.symbol).collect()
    }

    pub fn model_index(&self, symbol: char) -> Result<usize> {
        self.index
            .get(&symbol)
            .copied()
            .ok_or(Error::UnknownCharacter(symbol))
    }

    pub fn model(&self, symbol: char) -> Result<&CharacterModel> {
        Ok(&self.models[self.model_index(symbol)?])
    }

    pub fn states_per_model(&self) -> usize {
        self.models.first().map_or(0, |m| m.states.len())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Writer::new();
        w.line(&["chansel-hmm", "1"]);
        let codes: Vec<String> = self.models.iter().map(|m| (m.symbol as u32).to_string()).collect();
        let codes: Vec<&str> = codes.iter().map(String::as_str).collect();
        let mut charset = vec!["charset"];
        charset.extend(codes);
        w.line(&charset);
        w.line(&["states", &self.states_per_model().to_string()]);
        w.line(&["gaussians", &self.gaussians.to_string()]);
        w.line(&["dim", &self.dim.to_string()]);
        for m in &self.models {
            w.line(&["char", &(m.symbol as u32).to_string()]);
            for (i, s) in m.states.iter().enumerate() {
                w.line(&["state", &i.to_string()]);
                w.line(&["trans", &fmt_f64(s.self_prob), &fmt_f64(s.next_prob())]);
                w.line(&["components", &s.gmm.components.len().to_string()]);
                for c in &s.gmm.components {
                    w.line(&["weight", &fmt_f64(c.weight)]);
                    w.floats("mean", &c.mean);
                    w.floats("var", &c.var);
                }
            }
        }
        w.write_to(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = Reader::open(path)?;
        r.expect_header("chansel-hmm", "1")?;
        let charset: Vec<char> = r
            .value("charset")?
            .split_whitespace()
            .map(|t| t.parse::<u32>().ok().and_then(char::from_u32))
            .collect::<Option<_>>()
            .ok_or_else(|| r.error("bad charset code point"))?;
        if charset.is_empty() {
            return Err(r.error("empty charset"));
        }
        let states: usize = r.parsed("states")?;
        let gaussians: usize = r.parsed("gaussians")?;
        let dim: usize = r.parsed("dim")?;
        let mut models = Vec::with_capacity(charset.len());
        for &symbol in &charset {
            let code: u32 = r.parsed("char")?;
            if char::from_u32(code) != Some(symbol) {
                return Err(r.error(format!("expected model for {symbol:?}")));
            }
            let mut st = Vec::with_capacity(states);
            for i in 0..states {
                let idx: usize = r.parsed("state")?;
                if idx != i {
                    return Err(r.error(format!("expected state {i}, found {idx}")));
                }
                let trans = r.floats("trans", 2)?;
                if (trans[0] + trans[1] - 1.0).abs() > 1e-9 || !(0.0..=1.0).contains(&trans[0]) {
                    return Err(r.error("transition row does not sum to 1"));
                }
                let n: usize = r.parsed("components")?;
                let mut components = Vec::with_capacity(n);
                for _ in 0..n {
                    let weight: f64 = r.parsed("weight")?;
                    let mean = r.floats("mean", dim)?;
                    let var = r.floats("var", dim)?;
                    if var.iter().any(|&v| !(v >= VARIANCE_FLOOR)) {
                        return Err(r.error("variance below floor"));
                    }
                    components.push(GaussianComponent { weight, mean, var });
                }
                let wsum: f64 = components.iter().map(|c| c.weight).sum();
                if n == 0 || (wsum - 1.0).abs() > 1e-9 {
                    return Err(r.error("mixture weights do not sum to 1"));
                }
                st.push(HmmState {
                    gmm: Gmm { components },
                    self_prob: trans[0],
                });
            }
            models.push(CharacterModel { symbol, states: st });
        }
        r.expect_end()?;
        Ok(ModelSet::new(dim, gaussians, models))
    }
}

/// A left-right chain of emitting states for one word.
#[derive(Clone, Debug)]
pub struct WordModel<'a> {
    pub word: String,
    pub states: Vec<&'a HmmState>,
    /// `(model index, state index)` of every chain position.
    pub origin: Vec<(usize, usize)>,
}

impl WordModel<'_> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn log_self(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.self_prob.ln()).collect()
    }

    pub fn log_next(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.next_prob().ln()).collect()
    }
}

/// Chains the character models of `word`; the exit mass of each character's
/// last state feeds the next character's first state.
pub fn concat_word_model<'a>(models: &'a ModelSet, word: &str) -> Result<WordModel<'a>> {
    let mut states = Vec::new();
    let mut origin = Vec::new();
    for ch in word.chars() {
        let mi = models.model_index(ch)?;
        for (si, s) in models.models[mi].states.iter().enumerate() {
            states.push(s);
            origin.push((mi, si));
        }
    }
    Ok(WordModel {
        word: word.to_string(),
        states,
        origin,
    })
}
