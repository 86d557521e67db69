//! Command-line surface: corpus generation, channel labeling, selector and
//! HMM training, recognition and studies.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PipelineConfig, Preset, OUTPUT_DIR_ENV};
use crate::error::{Error, Result};
use crate::evalkit::{run_study, Study, StudyContext};
use crate::hmmrec::{recognize_word, Lexicon, ModelSet};
use crate::imagecore::{load_image, normalize_height, to_channel_set, Channel, NORMALIZED_HEIGHT};
use crate::mlselect::{ChannelLabelVector, SelectorModel, NUM_CLASSES};
use crate::phogfeat::{extract_sequence, ExtractOptions, SelectionMode};
use crate::pipeline::{
    extract_all, label_items, load_corpus, split, train_base, train_models, train_selection, train_selector, Item,
};
use crate::synthgen::{
    gen_corpus, random_lexicon, ContrastRegime, CorpusSpec, NoiseSpec, RenderOptions, LEXICON_FILE, MANIFEST_FILE,
};
use crate::textfmt::{Reader, Writer};

#[derive(Parser, Debug)]
#[command(name = "chansel", version, about = "Scene-text word recognition with color channel selection")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Config file in the `chansel-config` format; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter preset: full or desk.
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Validate inputs and configuration, then exit without writing.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a seeded synthetic word corpus.
    GenCorpus {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        lexicon_size: Option<usize>,
        /// Noise as `kind:level`, e.g. `gaussian:10`.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Fraction of words rendered with two contrast regimes.
        #[arg(long, default_value_t = 0.5)]
        split_fraction: f64,
        #[arg(long)]
        clutter: Option<f64>,
    },
    /// Cross-validated channel labels for the training split.
    LabelChannels {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the one-vs-rest channel selector from a labels file.
    TrainSelector {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        features: Option<String>,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train character HMMs on the training split under one selection mode.
    TrainHmm {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        selector: Option<PathBuf>,
        #[arg(long)]
        states: Option<usize>,
        #[arg(long)]
        gaussians: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recognize word images against a lexicon.
    Recognize {
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, required = true, num_args = 1..)]
        image: Vec<PathBuf>,
        #[arg(long)]
        hmm: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        selector: Option<PathBuf>,
    },
    /// Train on the corpus and write study reports.
    Study {
        /// channel-table, feature-table, noise-curve, resolution-curve,
        /// runtime-ratio or all.
        #[arg(long, default_value = "all")]
        study: String,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on validation errors, 2 on runtime errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.common)?;
    let jobs = cli.common.jobs.unwrap_or(0);
    if cli.common.jobs == Some(0) {
        return Err(Error::Config("--jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let dry = cli.common.dry_run;
    pool.install(|| match cli.command {
        Command::GenCorpus {
            out,
            count,
            lexicon_size,
            noise,
            scale,
            split_fraction,
            clutter,
        } => gen_corpus_cmd(cfg, out, count, lexicon_size, noise, scale, split_fraction, clutter, dry),
        Command::LabelChannels { corpus, lexicon, out } => label_cmd(cfg, corpus, lexicon, out, dry),
        Command::TrainSelector { labels, features, c, out } => train_selector_cmd(cfg, labels, features, c, out, dry),
        Command::TrainHmm {
            corpus,
            mode,
            selector,
            states,
            gaussians,
            iters,
            out,
        } => {
            let mut cfg = cfg;
            if let Some(s) = states {
                cfg.hmm.states = s;
            }
            if let Some(g) = gaussians {
                cfg.hmm.gaussians = g;
            }
            if let Some(i) = iters {
                cfg.hmm.iters = i;
            }
            train_hmm_cmd(cfg, corpus, mode, selector, out, dry)
        }
        Command::Recognize {
            mode,
            image,
            hmm,
            lexicon,
            selector,
        } => recognize_cmd(cfg, mode, image, hmm, lexicon, selector, dry),
        Command::Study {
            study,
            corpus,
            lexicon,
            out,
        } => study_cmd(cfg, study, corpus, lexicon, out, dry),
    })
}

fn build_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.preset {
        Some(p) => PipelineConfig::preset(p.parse::<Preset>()?),
        None => PipelineConfig::default(),
    };
    if let Some(path) = &common.config {
        require_file(path)?;
        cfg.apply_file(path)?;
    }
    if let Some(root) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.relocate(Path::new(&root));
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("input file {} does not exist", path.display())))
    }
}

/// A corpus argument may name the manifest or its directory.
fn manifest_path(cfg: &PipelineConfig, corpus: Option<PathBuf>) -> Result<PathBuf> {
    let p = corpus.unwrap_or_else(|| cfg.corpus_dir.clone());
    let p = if p.is_dir() { p.join(MANIFEST_FILE) } else { p };
    require_file(&p)?;
    Ok(p)
}

fn lexicon_path(manifest: &Path, lexicon: Option<PathBuf>) -> Result<PathBuf> {
    let p = lexicon.unwrap_or_else(|| manifest.parent().unwrap_or(Path::new(".")).join(LEXICON_FILE));
    require_file(&p)?;
    Ok(p)
}

fn parse_mode(cfg: &PipelineConfig, mode: Option<String>) -> Result<SelectionMode> {
    match mode {
        Some(m) => m.parse(),
        None => Ok(cfg.mode),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn gen_corpus_cmd(
    mut cfg: PipelineConfig,
    out: Option<PathBuf>,
    count: Option<usize>,
    lexicon_size: Option<usize>,
    noise: Option<String>,
    scale: f64,
    split_fraction: f64,
    clutter: Option<f64>,
    dry: bool,
) -> Result<()> {
    if let Some(n) = count {
        cfg.count = n;
    }
    if let Some(n) = lexicon_size {
        cfg.lexicon_size = n;
    }
    cfg.validate()?;
    let noise = noise.map(|s| s.parse::<NoiseSpec>()).transpose()?;
    let mut render = RenderOptions::default();
    if let Some(c) = clutter {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("clutter {c} must be a non-negative number")));
        }
        render.clutter = c;
    }
    let lexicon = random_lexicon(&cfg.charset, cfg.lexicon_size, cfg.word_len.0, cfg.word_len.1, cfg.seed)?;
    let spec = CorpusSpec {
        seed: cfg.seed,
        charset: cfg.charset.clone(),
        lexicon,
        count: cfg.count,
        regimes: ContrastRegime::standard_set(),
        noise,
        resolution_scale: scale,
        split_fraction,
        render,
    };
    spec.validate()?;
    let out = out.unwrap_or_else(|| cfg.corpus_dir.clone());
    if dry {
        println!("dry run: would write {} images to {}", spec.count, out.display());
        return Ok(());
    }
    let manifest = gen_corpus(&spec, &out)?;
    println!(
        "wrote {} images to {} (spec sha256 {})",
        manifest.records.len(),
        out.display(),
        manifest.spec_hash
    );
    Ok(())
}

/// Channel labels of the training items, with the manifest they refer to.
pub struct LabelFile {
    pub manifest: PathBuf,
    pub entries: Vec<(String, ChannelLabelVector)>,
}

impl LabelFile {
    pub fn to_text(&self) -> String {
        let mut w = Writer::new();
        w.line(&["chansel-labels", "1"]);
        w.line(&["manifest", &self.manifest.display().to_string()]);
        let names: Vec<&str> = Channel::SELECTABLE.iter().map(|c| c.name()).collect();
        w.line(&[&["channels"][..], &names].concat());
        for (id, l) in &self.entries {
            let bits: String = l.bits().iter().map(|&b| if b > 0 { '1' } else { '0' }).collect();
            w.line(&["item", id, &bits]);
        }
        w.into_string()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        ensure_parent(path)?;
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = Reader::open(path)?;
        r.expect_header("chansel-labels", "1")?;
        let manifest = PathBuf::from(r.value("manifest")?);
        let channels = r.value("channels")?;
        let expected: Vec<&str> = Channel::SELECTABLE.iter().map(|c| c.name()).collect();
        if channels.split_whitespace().collect::<Vec<_>>() != expected {
            return Err(r.error(format!("channel order must be {}", expected.join(" "))));
        }
        let mut entries = Vec::new();
        for (key, value) in r.entries()? {
            let bad = || Error::parse(path.display().to_string(), format!("bad label line {key} {value}"));
            if key != "item" {
                return Err(bad());
            }
            let (id, bits) = value.split_once(' ').ok_or_else(bad)?;
            if bits.len() != NUM_CLASSES {
                return Err(bad());
            }
            let mut v = [-1i8; NUM_CLASSES];
            for (k, ch) in bits.chars().enumerate() {
                v[k] = match ch {
                    '1' => 1,
                    '0' => -1,
                    _ => return Err(bad()),
                };
            }
            entries.push((id.to_string(), ChannelLabelVector::new(v)?));
        }
        Ok(LabelFile { manifest, entries })
    }
}

fn train_items<'a>(cfg: &PipelineConfig, items: &'a [Item]) -> Vec<&'a Item> {
    split(items, cfg.holdout).0
}

fn label_cmd(
    cfg: PipelineConfig,
    corpus: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    out: Option<PathBuf>,
    dry: bool,
) -> Result<()> {
    let manifest = manifest_path(&cfg, corpus)?;
    let lexicon = Lexicon::load(&lexicon_path(&manifest, lexicon)?)?;
    let out = out.unwrap_or_else(|| cfg.models_dir.join("labels.txt"));
    if dry {
        println!("dry run: would label {} and write {}", manifest.display(), out.display());
        return Ok(());
    }
    let (_, items) = load_corpus(&manifest)?;
    let train = train_items(&cfg, &items);
    let labels = label_items(&train, &lexicon, &cfg)?;
    let manifest = std::path::absolute(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let file = LabelFile {
        manifest,
        entries: train.iter().map(|it| it.id.clone()).zip(labels).collect(),
    };
    file.save(&out)?;
    println!("labeled {} items into {}", file.entries.len(), out.display());
    Ok(())
}

fn labeled_items(file: &LabelFile) -> Result<(Vec<Item>, Vec<ChannelLabelVector>)> {
    let (_, items) = load_corpus(&file.manifest)?;
    let mut chosen = Vec::with_capacity(file.entries.len());
    let mut labels = Vec::with_capacity(file.entries.len());
    for (id, l) in &file.entries {
        let it = items
            .iter()
            .find(|it| &it.id == id)
            .ok_or_else(|| Error::Config(format!("labeled item {id} not in {}", file.manifest.display())))?;
        chosen.push(it.clone());
        labels.push(*l);
    }
    Ok((chosen, labels))
}

fn train_selector_cmd(
    mut cfg: PipelineConfig,
    labels: PathBuf,
    features: Option<String>,
    c: Option<f64>,
    out: Option<PathBuf>,
    dry: bool,
) -> Result<()> {
    if let Some(f) = features {
        cfg.feature = f.parse()?;
    }
    if let Some(c) = c {
        cfg.svm_c = c;
    }
    cfg.validate()?;
    require_file(&labels)?;
    let file = LabelFile::load(&labels)?;
    let out = out.unwrap_or_else(|| cfg.models_dir.join("selector.model"));
    if dry {
        println!("dry run: would train a {} selector on {} items into {}", cfg.feature.name(), file.entries.len(), out.display());
        return Ok(());
    }
    let (items, labels) = labeled_items(&file)?;
    let refs: Vec<&Item> = items.iter().collect();
    let model = train_selector(&refs, &labels, cfg.feature, &cfg)?;
    ensure_parent(&out)?;
    model.save(&out)?;
    println!("wrote selector {} (feature_kind={})", out.display(), cfg.feature.name());
    Ok(())
}

fn mode_file_name(mode: SelectionMode) -> String {
    format!("hmm-{}.hmm", mode.to_string().replace(':', "-"))
}

fn load_selector(mode: SelectionMode, selector: Option<PathBuf>) -> Result<Option<SelectorModel>> {
    match (mode, selector) {
        (SelectionMode::Fixed(_), _) => Ok(None),
        (_, Some(p)) => {
            require_file(&p)?;
            Ok(Some(SelectorModel::load(&p)?))
        }
        (_, None) => Err(Error::Config(format!("mode {mode} needs --selector"))),
    }
}

fn train_hmm_cmd(
    cfg: PipelineConfig,
    corpus: Option<PathBuf>,
    mode: Option<String>,
    selector: Option<PathBuf>,
    out: Option<PathBuf>,
    dry: bool,
) -> Result<()> {
    cfg.validate()?;
    let mode = parse_mode(&cfg, mode)?;
    let manifest = manifest_path(&cfg, corpus)?;
    let selector = load_selector(mode, selector)?;
    let out = out.unwrap_or_else(|| cfg.models_dir.join(mode_file_name(mode)));
    if dry {
        println!("dry run: would train {mode} models on {} into {}", manifest.display(), out.display());
        return Ok(());
    }
    let (_, items) = load_corpus(&manifest)?;
    let train = train_items(&cfg, &items);
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    let seqs = extract_all(&train, selector.as_ref(), mode, &opts)?;
    let texts: Vec<&str> = train.iter().map(|it| it.text.as_str()).collect();
    let (models, report) = train_models(&seqs, &texts, &cfg)?;
    ensure_parent(&out)?;
    models.save(&out)?;
    println!(
        "wrote {} (final log-likelihood {}, skipped {})",
        out.display(),
        report.final_log_likelihood.map_or("n/a".into(), |v| format!("{v:.4}")),
        report.skipped
    );
    Ok(())
}

fn recognize_cmd(
    cfg: PipelineConfig,
    mode: Option<String>,
    images: Vec<PathBuf>,
    hmm: PathBuf,
    lexicon: PathBuf,
    selector: Option<PathBuf>,
    dry: bool,
) -> Result<()> {
    let mode = parse_mode(&cfg, mode)?;
    for p in images.iter().chain([&hmm, &lexicon]) {
        require_file(p)?;
    }
    let selector = load_selector(mode, selector)?;
    let models = ModelSet::load(&hmm)?;
    let lexicon = Lexicon::load(&lexicon)?;
    lexicon.check(&models)?;
    if dry {
        println!("dry run: would recognize {} images", images.len());
        return Ok(());
    }
    let opts = ExtractOptions {
        spec: cfg.window,
        baseline: None,
    };
    for p in &images {
        let img = normalize_height(&load_image(p)?, NORMALIZED_HEIGHT)?;
        let seq = extract_sequence(&to_channel_set(&img), selector.as_ref(), mode, &opts)?;
        let r = recognize_word(&models, &lexicon, &seq.vectors)?;
        println!("{}\t{}\t{:.4}", p.display(), r.best(), r.best_score());
    }
    Ok(())
}

fn study_cmd(
    cfg: PipelineConfig,
    study: String,
    corpus: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    out: Option<PathBuf>,
    dry: bool,
) -> Result<()> {
    let studies = if study == "all" {
        Study::ALL.to_vec()
    } else {
        study.split(',').map(str::parse).collect::<Result<Vec<Study>>>()?
    };
    let manifest_file = manifest_path(&cfg, corpus)?;
    let lexicon = Lexicon::load(&lexicon_path(&manifest_file, lexicon)?)?;
    let out = out.unwrap_or_else(|| cfg.reports_dir.clone());
    if dry {
        let names: Vec<&str> = studies.iter().map(|s| s.name()).collect();
        println!("dry run: would run {} into {}", names.join(", "), out.display());
        return Ok(());
    }
    let (manifest, items) = load_corpus(&manifest_file)?;
    let (train, test) = split(&items, cfg.holdout);
    let base = train_base(&train, &lexicon, &cfg)?;
    let selection = train_selection(&train, &base.labels, cfg.feature, &cfg)?;
    let ctx = StudyContext {
        corpus_id: manifest.spec_hash.clone(),
        train,
        test,
        lexicon: &lexicon,
        cfg: &cfg,
        base: &base,
        selection: &selection,
    };
    for s in studies {
        let o = run_study(&ctx, s, &out)?;
        for f in &o.files {
            println!("{s}: {}", f.display());
        }
        if o.tables.iter().any(|t| t.is_partial()) {
            eprintln!("warning: {s} report is partial");
        }
    }
    Ok(())
}
