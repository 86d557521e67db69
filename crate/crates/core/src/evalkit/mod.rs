//! Selection and recognition metrics, the oracle bound, and report studies.

pub mod metrics;
pub mod report;
pub mod study;

use std::fmt;

use crate::imagecore::Channel;

pub use metrics::{levenshtein, multilabel_metrics, oracle_eval, oracle_hypotheses, word_char_accuracy, MultiLabelReport};
pub use report::{chart_data, line_chart, Cell, Table};
pub use study::{
    evaluate_mode, fixed_channel_labels, run_study, selection_audit, AuditSummary, RuntimeSummary, Study,
    StudyContext, StudyOutput, AUDIT_MARGIN, NOISE_LEVELS, RESOLUTION_SCALES, RUNTIME_BASELINE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportMode {
    Fixed(Channel),
    PerImage,
    PerWindow,
    Oracle,
}

impl ReportMode {
    /// Row label in channel tables.
    pub fn label(self) -> String {
        match self {
            ReportMode::Fixed(c) => c.to_string(),
            ReportMode::PerImage => "Proposed-PerImage".into(),
            ReportMode::PerWindow => "Proposed-PerWindow".into(),
            ReportMode::Oracle => "Oracle".into(),
        }
    }
}

impl fmt::Display for ReportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportRow {
    pub mode: ReportMode,
    pub word_acc: f64,
    pub char_acc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecognitionReport {
    pub corpus_id: String,
    pub rows: Vec<ReportRow>,
    pub runtime_per_word: Option<f64>,
}

impl RecognitionReport {
    pub fn row(&self, mode: ReportMode) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    /// Highest fixed-channel word accuracy.
    pub fn best_fixed(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| matches!(r.mode, ReportMode::Fixed(_)))
            .map(|r| r.word_acc)
            .reduce(f64::max)
    }
}
