//! Pipeline configuration: defaults, the desk preset, and the config file.

use std::path::{Path, PathBuf};

use crate::chanfeat::FeatureKind;
use crate::error::{Error, Result};
use crate::hmmrec::TrainOptions;
use crate::phogfeat::{SelectionMode, WindowSpec};
use crate::synthgen::font;
use crate::textfmt::{fmt_f64, Reader, Writer};

pub const OUTPUT_DIR_ENV: &str = "CHANSEL_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Full,
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::Config(format!("unknown preset {s:?}; expected full or desk"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus_dir: PathBuf,
    pub models_dir: PathBuf,
    pub reports_dir: PathBuf,
    pub feature: FeatureKind,
    pub mode: SelectionMode,
    pub window: WindowSpec,
    pub hmm: TrainOptions,
    pub svm_c: f64,
    pub folds: usize,
    pub seed: u64,
    pub charset: String,
    pub lexicon_size: usize,
    pub word_len: (usize, usize),
    pub count: usize,
    /// Every `holdout`-th item (offset `holdout − 1`) is held out for testing.
    pub holdout: usize,
    /// Per-window selector rows use every `selector_window_step`-th window.
    pub selector_window_step: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_dir: PathBuf::from("corpus"),
            models_dir: PathBuf::from("models"),
            reports_dir: PathBuf::from("reports"),
            feature: FeatureKind::Wavelet,
            mode: SelectionMode::PerWindow,
            window: WindowSpec::default(),
            hmm: TrainOptions {
                states: 6,
                gaussians: 32,
                iters: 5,
            },
            svm_c: 1.0,
            folds: 4,
            seed: 1,
            charset: ('A'..='Z').chain('0'..='9').collect(),
            lexicon_size: 10_000,
            word_len: (3, 8),
            count: 2000,
            holdout: 5,
            selector_window_step: 2,
        }
    }
}

impl PipelineConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Full => PipelineConfig::default(),
            Preset::Desk => PipelineConfig {
                hmm: TrainOptions {
                    states: 3,
                    gaussians: 2,
                    iters: 4,
                },
                charset: "ABCDEFGHIJ".into(),
                lexicon_size: 50,
                word_len: (3, 6),
                count: 400,
                ..PipelineConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.window.validate()?;
        if !(1..=16).contains(&self.hmm.states) {
            return bad(format!("states {} outside 1..=16", self.hmm.states));
        }
        if !(1..=256).contains(&self.hmm.gaussians) {
            return bad(format!("gaussians {} outside 1..=256", self.hmm.gaussians));
        }
        if self.hmm.iters > 100 {
            return bad(format!("iters {} above 100", self.hmm.iters));
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.svm_c));
        }
        if self.folds < 2 {
            return bad(format!("folds {} below 2", self.folds));
        }
        if self.holdout < 2 {
            return bad(format!("holdout {} below 2", self.holdout));
        }
        if self.selector_window_step == 0 {
            return bad("selector_window_step must be positive".into());
        }
        if self.count == 0 || self.lexicon_size == 0 {
            return bad("count and lexicon_size must be positive".into());
        }
        let (lo, hi) = self.word_len;
        if lo == 0 || lo > hi {
            return bad(format!("word length range {lo}..={hi} is empty"));
        }
        if self.charset.is_empty() {
            return bad("empty charset".into());
        }
        if let Some(c) = self.charset.chars().find(|&c| !font::has_glyph(c)) {
            return Err(Error::UnknownGlyph(c));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::new();
        w.line(&["chansel-config", "1"]);
        w.line(&["corpus_dir", &self.corpus_dir.display().to_string()]);
        w.line(&["models_dir", &self.models_dir.display().to_string()]);
        w.line(&["reports_dir", &self.reports_dir.display().to_string()]);
        w.line(&["feature", self.feature.name()]);
        w.line(&["mode", &self.mode.to_string()]);
        w.line(&["window_height", &self.window.height.to_string()]);
        w.line(&["window_width", &self.window.width.to_string()]);
        w.line(&["window_stride", &self.window.stride.to_string()]);
        w.line(&["states", &self.hmm.states.to_string()]);
        w.line(&["gaussians", &self.hmm.gaussians.to_string()]);
        w.line(&["iters", &self.hmm.iters.to_string()]);
        w.line(&["C", &fmt_f64(self.svm_c)]);
        w.line(&["folds", &self.folds.to_string()]);
        w.line(&["seed", &self.seed.to_string()]);
        w.line(&["charset", &self.charset]);
        w.line(&["lexicon_size", &self.lexicon_size.to_string()]);
        w.line(&["word_len", &self.word_len.0.to_string(), &self.word_len.1.to_string()]);
        w.line(&["count", &self.count.to_string()]);
        w.line(&["holdout", &self.holdout.to_string()]);
        w.line(&["selector_window_step", &self.selector_window_step.to_string()]);
        w.into_string()
    }

    /// Applies every key in the file on top of `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let mut r = Reader::open(path)?;
        r.expect_header("chansel-config", "1")?;
        for (key, value) in r.entries()? {
            self.set(&key, &value)
                .map_err(|e| Error::Config(format!("{}: {key}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad number {v:?}")))
        }
        match key {
            "preset" => *self = PipelineConfig::preset(value.parse()?),
            "corpus_dir" => self.corpus_dir = value.into(),
            "models_dir" => self.models_dir = value.into(),
            "reports_dir" => self.reports_dir = value.into(),
            "feature" => self.feature = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "window_height" => self.window.height = num(value)?,
            "window_width" => self.window.width = num(value)?,
            "window_stride" => self.window.stride = num(value)?,
            "states" => self.hmm.states = num(value)?,
            "gaussians" => self.hmm.gaussians = num(value)?,
            "iters" => self.hmm.iters = num(value)?,
            "C" => self.svm_c = num(value)?,
            "folds" => self.folds = num(value)?,
            "seed" => self.seed = num(value)?,
            "charset" => self.charset = value.to_string(),
            "lexicon_size" => self.lexicon_size = num(value)?,
            "word_len" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                let [lo, hi] = parts[..] else {
                    return Err(Error::Config("word_len needs two values".into()));
                };
                self.word_len = (num(lo)?, num(hi)?);
            }
            "count" => self.count = num(value)?,
            "holdout" => self.holdout = num(value)?,
            "selector_window_step" => self.selector_window_step = num(value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Redirects all three output directories under `root`.
    pub fn relocate(&mut self, root: &Path) {
        self.corpus_dir = root.join("corpus");
        self.models_dir = root.join("models");
        self.reports_dir = root.join("reports");
    }
}
