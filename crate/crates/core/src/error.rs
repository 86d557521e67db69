use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {what}: {reason}")]
    Format { what: String, reason: String },

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("patch {width}x{height} is smaller than the required {min_width}x{min_height}")]
    PatchTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite feature value in training row {row}")]
    NonFinite { row: usize },

    #[error("baseline fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("empty observation sequence")]
    EmptySequence,

    #[error("empty lexicon")]
    EmptyLexicon,

    #[error("no character model for {0:?}")]
    UnknownCharacter(char),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no glyph for {0:?} in the bitmap font")]
    UnknownGlyph(char),

    #[error("noise level {0} outside [0, 30]")]
    LevelOutOfRange(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            reason: reason.into(),
        }
    }

    /// Validation failures map to exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::LevelOutOfRange(_)
                | Error::UnknownGlyph(_)
                | Error::UnknownCharacter(_)
                | Error::EmptyLexicon
        )
    }
}
