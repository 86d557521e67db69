//! Study harness: channel and feature tables, degradation curves and the
//! runtime comparison.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::chanfeat::{selection_descriptor, whole_region, FeatureKind};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::hmmrec::{recognize_word, Lexicon, ModelSet};
use crate::imagecore::{to_channel_set, Channel};
use crate::mlselect::{predict, ChannelLabelVector, SelectorModel};
use crate::phogfeat::{extract_sequence, sliding_windows, ExtractOptions, SelectionMode, WindowSpec};
use crate::pipeline::{run_mode, train_selection, BaseSystem, Item, SelectionSystem};
use crate::synthgen::{apply_noise, degrade_resolution, NoiseKind, NoiseSpec};

use super::metrics::{multilabel_metrics, oracle_hypotheses, word_char_accuracy};
use super::report::{line_chart, write_file, Cell, Table};
use super::{RecognitionReport, ReportMode, ReportRow};

pub const NOISE_LEVELS: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const RESOLUTION_SCALES: [f64; 9] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2];
/// Windows whose center lies closer than this to a regime boundary are left
/// out of the selection audit.
pub const AUDIT_MARGIN: f64 = 16.0;
/// Fixed channel timed against per-window selection.
pub const RUNTIME_BASELINE: Channel = Channel::Y;
const RUNTIME_REPEATS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Study {
    ChannelTable,
    FeatureTable,
    NoiseCurve,
    ResolutionCurve,
    RuntimeRatio,
}

impl Study {
    pub const ALL: [Study; 5] = [
        Study::ChannelTable,
        Study::FeatureTable,
        Study::NoiseCurve,
        Study::ResolutionCurve,
        Study::RuntimeRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Study::ChannelTable => "channel-table",
            Study::FeatureTable => "feature-table",
            Study::NoiseCurve => "noise-curve",
            Study::ResolutionCurve => "resolution-curve",
            Study::RuntimeRatio => "runtime-ratio",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Study::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown study {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Everything a study reads: the split corpus and the trained systems.
pub struct StudyContext<'a> {
    pub corpus_id: String,
    pub train: Vec<&'a Item>,
    pub test: Vec<&'a Item>,
    pub lexicon: &'a Lexicon,
    pub cfg: &'a PipelineConfig,
    pub base: &'a BaseSystem,
    pub selection: &'a SelectionSystem,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSummary {
    pub windows: usize,
    pub matched: usize,
}

impl AuditSummary {
    pub fn rate(&self) -> f64 {
        if self.windows == 0 {
            0.0
        } else {
            self.matched as f64 / self.windows as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuntimeSummary {
    pub fixed_seconds_per_word: f64,
    pub selection_seconds_per_word: f64,
}

impl RuntimeSummary {
    pub fn ratio(&self) -> f64 {
        self.selection_seconds_per_word / self.fixed_seconds_per_word
    }
}

#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub study: Study,
    pub tables: Vec<Table>,
    pub files: Vec<PathBuf>,
    pub recognition: Option<RecognitionReport>,
    pub runtime: Option<RuntimeSummary>,
}

impl StudyOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Fraction of audited windows whose chosen channel equals the
/// generation-time target at the window center. Items without a target map
/// are skipped.
pub fn selection_audit(items: &[&Item], chosen: &[Vec<Channel>], window: &WindowSpec) -> Result<AuditSummary> {
    if items.len() != chosen.len() {
        return Err(Error::LengthMismatch {
            left: items.len(),
            right: chosen.len(),
        });
    }
    let mut summary = AuditSummary { windows: 0, matched: 0 };
    for (it, ch) in items.iter().zip(chosen) {
        let Some(target) = &it.target else { continue };
        let rects = sliding_windows(it.channels.width(), it.channels.height(), window, None);
        for (r, c) in rects.iter().zip(ch) {
            let x = r.center_x();
            if target.boundary_distance(x) < AUDIT_MARGIN {
                continue;
            }
            summary.windows += 1;
            summary.matched += (*c == target.at(x)) as usize;
        }
    }
    Ok(summary)
}

/// Hypotheses and window choices of `items` under `mode`.
pub fn evaluate_mode(ctx: &StudyContext<'_>, items: &[&Item], mode: SelectionMode) -> Result<(Vec<String>, Vec<Vec<Channel>>)> {
    let (models, selector) = mode_models(ctx.base, ctx.selection, mode);
    let out = run_mode(items, models, selector, mode, ctx.lexicon, ctx.cfg)?;
    Ok((out.hypotheses, out.chosen))
}

fn mode_models<'a>(
    base: &'a BaseSystem,
    selection: &'a SelectionSystem,
    mode: SelectionMode,
) -> (&'a ModelSet, Option<&'a SelectorModel>) {
    match mode {
        SelectionMode::Fixed(c) => (base.fixed_models(c), None),
        _ => (selection.models(mode).expect("selection mode"), Some(&selection.selector)),
    }
}

fn truth(items: &[&Item]) -> Vec<String> {
    items.iter().map(|it| it.text.clone()).collect()
}

fn status<T>(r: &Result<T>) -> Cell {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}").into(),
    }
}

fn acc_cells(r: &Result<(f64, f64)>) -> [Cell; 2] {
    match r {
        Ok((w, c)) => [(*w).into(), (*c).into()],
        Err(_) => [Cell::Missing, Cell::Missing],
    }
}

/// Label vectors of `items` derived from the fixed-channel recognizers:
/// positive for every selectable channel that reads the word correctly.
pub fn fixed_channel_labels(ctx: &StudyContext<'_>, items: &[&Item]) -> Result<Vec<ChannelLabelVector>> {
    let t = truth(items);
    let mut correct = vec![Vec::new(); items.len()];
    for c in Channel::SELECTABLE {
        let (hyps, _) = evaluate_mode(ctx, items, SelectionMode::Fixed(c))?;
        for (i, h) in hyps.iter().enumerate() {
            if *h == t[i] {
                correct[i].push(c);
            }
        }
    }
    Ok(correct.iter().map(|cs| ChannelLabelVector::from_positive(cs)).collect())
}

pub fn run_study(ctx: &StudyContext<'_>, study: Study, out_dir: &Path) -> Result<StudyOutput> {
    if ctx.test.is_empty() {
        return Err(Error::InsufficientData("no test items".into()));
    }
    let mut out = match study {
        Study::ChannelTable => channel_table(ctx)?,
        Study::FeatureTable => feature_table(ctx)?,
        Study::NoiseCurve => noise_curve(ctx)?,
        Study::ResolutionCurve => resolution_curve(ctx)?,
        Study::RuntimeRatio => runtime_ratio(ctx)?,
    };
    for t in &out.tables {
        let path = out_dir.join(format!("{}.csv", t.name));
        t.write_csv(&path)?;
        out.files.push(path);
    }
    if let Some(t) = out.tables.first() {
        if let Some(chart) = curve_chart(study, t) {
            let path = out_dir.join(format!("{}.svg", t.name));
            write_file(&path, &chart)?;
            out.files.push(path);
        }
    }
    if let Some(rt) = out.runtime {
        let mut t = Table::new("runtime_timing", &["mode", "mean_ms_per_word"]);
        t.push(vec![SelectionMode::Fixed(RUNTIME_BASELINE).to_string().into(), (rt.fixed_seconds_per_word * 1e3).into()]);
        t.push(vec![SelectionMode::PerWindow.to_string().into(), (rt.selection_seconds_per_word * 1e3).into()]);
        t.push(vec!["ratio".into(), rt.ratio().into()]);
        let path = out_dir.join("runtime_timing.csv");
        t.write_csv(&path)?;
        out.files.push(path);
    }
    Ok(out)
}

fn curve_chart(study: Study, t: &Table) -> Option<String> {
    let (title, x_label) = match study {
        Study::NoiseCurve => ("Word accuracy under Gaussian noise", "level"),
        Study::ResolutionCurve => ("Word accuracy under reduced resolution", "scale"),
        _ => return None,
    };
    let xs = t.series(x_label);
    let ys = t.series("word_acc");
    let pts: Vec<(f64, Option<f64>)> = xs.into_iter().zip(ys).filter_map(|(x, y)| Some((x?, y))).collect();
    Some(line_chart(title, x_label, "word_acc", &pts))
}

fn channel_table(ctx: &StudyContext<'_>) -> Result<StudyOutput> {
    let t = truth(&ctx.test);
    let mut table = Table::new("channel_table", &["method", "word_acc", "char_acc", "status"]);
    let mut rows = Vec::new();
    let mut per_channel = Vec::new();
    let mut push = |table: &mut Table, mode: ReportMode, r: &Result<(f64, f64)>| {
        let [w, c] = acc_cells(r);
        table.push(vec![mode.label().into(), w, c, status(r)]);
        if let Ok((w, c)) = r {
            rows.push(ReportRow {
                mode,
                word_acc: *w,
                char_acc: *c,
            });
        }
    };
    for c in Channel::ALL {
        let r = evaluate_mode(ctx, &ctx.test, SelectionMode::Fixed(c)).map(|(h, _)| h);
        let acc = r.as_ref().map_err(clone_err).and_then(|h| word_char_accuracy(&t, h));
        push(&mut table, ReportMode::Fixed(c), &acc);
        if let Ok(h) = r {
            per_channel.push((c, h));
        }
    }
    let oracle = oracle_hypotheses(&per_channel, &t).and_then(|(w, best)| Ok((w, word_char_accuracy(&t, &best)?.1)));
    push(&mut table, ReportMode::Oracle, &oracle);

    let mut audit = Table::new("selection_audit", &["mode", "windows", "matched", "match_rate", "status"]);
    for mode in [SelectionMode::PerImage, SelectionMode::PerWindow] {
        let r = evaluate_mode(ctx, &ctx.test, mode);
        let acc = r.as_ref().map_err(clone_err).and_then(|(h, _)| word_char_accuracy(&t, h));
        let label = if mode == SelectionMode::PerImage {
            ReportMode::PerImage
        } else {
            ReportMode::PerWindow
        };
        push(&mut table, label, &acc);
        let a = r.and_then(|(_, chosen)| selection_audit(&ctx.test, &chosen, &ctx.cfg.window));
        let cells = match &a {
            Ok(s) => [s.windows.into(), s.matched.into(), s.rate().into()],
            Err(_) => [Cell::Missing, Cell::Missing, Cell::Missing],
        };
        let [w, m, rate] = cells;
        audit.push(vec![mode.to_string().into(), w, m, rate, status(&a)]);
    }
    Ok(StudyOutput {
        study: Study::ChannelTable,
        tables: vec![table, audit],
        files: Vec::new(),
        recognition: Some(RecognitionReport {
            corpus_id: ctx.corpus_id.clone(),
            rows,
            runtime_per_word: None,
        }),
        runtime: None,
    })
}

/// Errors are not `Clone`; rows that reuse a failed intermediate report it
/// by message.
fn clone_err(e: &Error) -> Error {
    Error::InsufficientData(e.to_string())
}

fn feature_table(ctx: &StudyContext<'_>) -> Result<StudyOutput> {
    let t = truth(&ctx.test);
    let labels = fixed_channel_labels(ctx, &ctx.test)?;
    let mut table = Table::new(
        "feature_table",
        &["feature", "accuracy", "precision", "recall", "word_acc", "char_acc", "status"],
    );
    for kind in FeatureKind::ALL {
        let row = (|| -> Result<[f64; 5]> {
            let owned;
            let system = if ctx.selection.selector.kind == kind {
                ctx.selection
            } else {
                owned = train_selection(&ctx.train, &ctx.base.labels, kind, ctx.cfg)?;
                &owned
            };
            let pred = ctx
                .test
                .iter()
                .map(|it| {
                    let cs = &it.channels;
                    Ok(predict(&system.selector, &selection_descriptor(cs, whole_region(cs), kind)?)?.labels)
                })
                .collect::<Result<Vec<_>>>()?;
            let m = multilabel_metrics(&labels, &pred)?;
            let out = run_mode(
                &ctx.test,
                &system.per_window,
                Some(&system.selector),
                SelectionMode::PerWindow,
                ctx.lexicon,
                ctx.cfg,
            )?;
            let (w, c) = word_char_accuracy(&t, &out.hypotheses)?;
            Ok([m.accuracy, m.precision, m.recall, w, c])
        })();
        let mut cells: Vec<Cell> = vec![kind.name().into()];
        match &row {
            Ok(v) => cells.extend(v.iter().map(|&x| Cell::Num(x))),
            Err(_) => cells.extend(std::iter::repeat_n(Cell::Missing, 5)),
        }
        cells.push(status(&row));
        table.push(cells);
    }
    Ok(StudyOutput {
        study: Study::FeatureTable,
        tables: vec![table],
        files: Vec::new(),
        recognition: None,
        runtime: None,
    })
}

/// Per-item noise seed, shared by every level so that higher levels scale
/// the same pattern.
fn item_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

fn degraded_rows<F>(ctx: &StudyContext<'_>, name: &str, column: &str, params: &[f64], degrade: F) -> Result<Table>
where
    F: Fn(&Item, usize, f64) -> Result<Item> + Sync,
{
    use rayon::prelude::*;
    let t = truth(&ctx.test);
    let mut table = Table::new(name, &[column, "word_acc", "char_acc", "status"]);
    for &p in params {
        let r = (|| {
            let items = ctx
                .test
                .par_iter()
                .enumerate()
                .map(|(i, it)| degrade(it, i, p))
                .collect::<Result<Vec<Item>>>()?;
            let refs: Vec<&Item> = items.iter().collect();
            let (h, _) = evaluate_mode(ctx, &refs, ctx.cfg.mode)?;
            word_char_accuracy(&t, &h)
        })();
        let [w, c] = acc_cells(&r);
        table.push(vec![p.into(), w, c, status(&r)]);
    }
    Ok(table)
}

fn noise_curve(ctx: &StudyContext<'_>) -> Result<StudyOutput> {
    let seed = ctx.cfg.seed;
    let table = degraded_rows(ctx, "noise_curve", "level", &NOISE_LEVELS, |it, i, level| {
        let spec = NoiseSpec::new(NoiseKind::Gaussian, level)?;
        it.with_image(&apply_noise(&it.image, &spec, item_seed(seed, i))?)
    })?;
    Ok(StudyOutput {
        study: Study::NoiseCurve,
        tables: vec![table],
        files: Vec::new(),
        recognition: None,
        runtime: None,
    })
}

fn resolution_curve(ctx: &StudyContext<'_>) -> Result<StudyOutput> {
    let table = degraded_rows(ctx, "resolution_curve", "scale", &RESOLUTION_SCALES, |it, _, scale| {
        it.with_image(&degrade_resolution(&it.image, scale)?)
    })?;
    Ok(StudyOutput {
        study: Study::ResolutionCurve,
        tables: vec![table],
        files: Vec::new(),
        recognition: None,
        runtime: None,
    })
}

/// Wall time of converting, extracting and decoding every item on a single
/// worker, in seconds per word.
fn time_per_word(ctx: &StudyContext<'_>, mode: SelectionMode) -> Result<f64> {
    let (models, selector) = mode_models(ctx.base, ctx.selection, mode);
    let opts = ExtractOptions {
        spec: ctx.cfg.window,
        baseline: None,
    };
    let start = Instant::now();
    for it in &ctx.test {
        let cs = to_channel_set(&it.image);
        let seq = extract_sequence(&cs, selector, mode, &opts)?;
        recognize_word(models, ctx.lexicon, &seq.vectors)?;
    }
    Ok(start.elapsed().as_secs_f64() / ctx.test.len() as f64)
}

fn runtime_ratio(ctx: &StudyContext<'_>) -> Result<StudyOutput> {
    let fixed = SelectionMode::Fixed(RUNTIME_BASELINE);
    let window = SelectionMode::PerWindow;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let (tf, tw) = pool.install(|| -> Result<(f64, f64)> {
        time_per_word(ctx, fixed)?;
        time_per_word(ctx, window)?;
        let (mut tf, mut tw) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..RUNTIME_REPEATS {
            tf = tf.min(time_per_word(ctx, fixed)?);
            tw = tw.min(time_per_word(ctx, window)?);
        }
        Ok((tf, tw))
    })?;
    let t = truth(&ctx.test);
    let mut table = Table::new("runtime_ratio", &["mode", "words", "word_acc", "status"]);
    for mode in [fixed, window] {
        let r = evaluate_mode(ctx, &ctx.test, mode).and_then(|(h, _)| word_char_accuracy(&t, &h));
        let [w, _] = acc_cells(&r);
        table.push(vec![mode.to_string().into(), ctx.test.len().into(), w, status(&r)]);
    }
    Ok(StudyOutput {
        study: Study::RuntimeRatio,
        tables: vec![table],
        files: Vec::new(),
        recognition: None,
        runtime: Some(RuntimeSummary {
            fixed_seconds_per_word: tf,
            selection_seconds_per_word: tw,
        }),
    })
}
