//! Python bindings for `chansel`.

use std::path::PathBuf;

use chansel::chanfeat::{selection_descriptor as descriptor, whole_region, FeatureKind};
use chansel::config::{PipelineConfig, Preset};
use chansel::evalkit::{levenshtein as lev, multilabel_metrics as ml_metrics, word_char_accuracy as wc_accuracy};
use chansel::hmmrec::{recognize_word, Lexicon, ModelSet};
use chansel::imagecore::{load_image, normalize_height, to_channel_set, ChannelSet, ImageRGB, NORMALIZED_HEIGHT};
use chansel::mlselect::{predict, select_channel, ChannelLabelVector, SelectorModel};
use chansel::phogfeat::{extract_sequence as extract, ExtractOptions, SelectionMode};
use chansel::pipeline::{extract_all, label_items, load_corpus, split, train_models, train_selector as fit_selector};
use chansel::synthgen::{gen_corpus, random_lexicon, ContrastRegime, CorpusSpec, NoiseSpec, RenderOptions, MANIFEST_FILE};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: chansel::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = chansel::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn desk() -> PipelineConfig {
    PipelineConfig::preset(Preset::Desk)
}

fn channels(img: &ImageRGB) -> PyResult<ChannelSet> {
    Ok(to_channel_set(&normalize_height(img, NORMALIZED_HEIGHT).map_err(err)?))
}

/// RGB image with 8-bit channels.
#[pyclass(name = "Image", frozen)]
struct PyImage {
    inner: ImageRGB,
}

#[pymethods]
impl PyImage {
    /// Load a PNG or PPM file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyImage {
            inner: load_image(&path).map_err(err)?,
        })
    }

    /// Build from packed row-major RGB bytes.
    #[staticmethod]
    fn from_bytes(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        if data.len() != width * height * 3 {
            return Err(PyValueError::new_err(format!(
                "expected {} bytes for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let pixels = data.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        Ok(PyImage {
            inner: ImageRGB::new(width, height, pixels).map_err(err)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.inner.pixels().iter().flatten().copied().collect()
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_png(&path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Multi-label linear channel selector.
#[pyclass(name = "Selector", frozen)]
struct PySelector {
    inner: SelectorModel,
}

#[pymethods]
impl PySelector {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PySelector {
            inner: SelectorModel::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn feature(&self) -> &'static str {
        self.inner.kind.name()
    }

    /// Per-channel labels and scores for the whole image.
    fn predict(&self, image: &PyImage) -> PyResult<(Vec<String>, Vec<f64>)> {
        let cs = channels(&image.inner)?;
        let d = descriptor(&cs, whole_region(&cs), self.inner.kind).map_err(err)?;
        let p = predict(&self.inner, &d).map_err(err)?;
        let labels = p.labels.positives().iter().map(|c| c.name().to_string()).collect();
        Ok((labels, p.scores.to_vec()))
    }

    /// Single best channel for the whole image.
    fn select(&self, image: &PyImage) -> PyResult<String> {
        let cs = channels(&image.inner)?;
        let d = descriptor(&cs, whole_region(&cs), self.inner.kind).map_err(err)?;
        Ok(select_channel(&self.inner, &d).map_err(err)?.name().to_string())
    }
}

#[pyclass(name = "Lexicon", frozen)]
struct PyLexicon {
    inner: Lexicon,
}

#[pymethods]
impl PyLexicon {
    #[new]
    fn new(entries: Vec<String>) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: Lexicon::new(entries).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyLexicon {
            inner: Lexicon::load(&path).map_err(err)?,
        })
    }

    fn entries(&self) -> Vec<String> {
        self.inner.entries().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Character GMM-HMMs.
#[pyclass(name = "Models", frozen)]
struct PyModels {
    inner: ModelSet,
}

#[pymethods]
impl PyModels {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyModels {
            inner: ModelSet::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn charset(&self) -> String {
        self.inner.charset()
    }

    /// Ranked `(word, log-likelihood)` pairs over the lexicon.
    #[pyo3(signature = (image, lexicon, mode = "fixed:Y", selector = None))]
    fn recognize(
        &self,
        py: Python<'_>,
        image: &PyImage,
        lexicon: &PyLexicon,
        mode: &str,
        selector: Option<&PySelector>,
    ) -> PyResult<Vec<(String, f64)>> {
        let mode: SelectionMode = parse(mode)?;
        let cs = channels(&image.inner)?;
        let sel = selector.map(|s| &s.inner);
        let opts = ExtractOptions {
            spec: desk().window,
            baseline: None,
        };
        py.detach(|| {
            let seq = extract(&cs, sel, mode, &opts)?;
            recognize_word(&self.inner, &lexicon.inner, &seq.vectors)
        })
        .map(|r| r.hypotheses)
        .map_err(err)
    }
}

/// Whole-image selection descriptor of `image`.
#[pyfunction]
#[pyo3(signature = (image, feature = "wavelet"))]
fn selection_descriptor(image: &PyImage, feature: &str) -> PyResult<Vec<f64>> {
    let kind: FeatureKind = parse(feature)?;
    let cs = channels(&image.inner)?;
    Ok(descriptor(&cs, whole_region(&cs), kind).map_err(err)?.values)
}

/// PHOG observation sequence and the channel used for each window.
#[pyfunction]
#[pyo3(signature = (image, mode = "fixed:Y", selector = None))]
fn extract_sequence(image: &PyImage, mode: &str, selector: Option<&PySelector>) -> PyResult<(Vec<Vec<f64>>, Vec<String>)> {
    let mode: SelectionMode = parse(mode)?;
    let cs = channels(&image.inner)?;
    let opts = ExtractOptions {
        spec: desk().window,
        baseline: None,
    };
    let seq = extract(&cs, selector.map(|s| &s.inner), mode, &opts).map_err(err)?;
    let chosen = seq.chosen.iter().map(|c| c.name().to_string()).collect();
    Ok((seq.vectors, chosen))
}

/// Write a synthetic corpus and return the number of images.
#[pyfunction]
#[pyo3(signature = (out_dir, count = 400, seed = 7, noise = None, scale = 1.0, split_fraction = 0.5))]
fn generate_corpus(
    py: Python<'_>,
    out_dir: PathBuf,
    count: usize,
    seed: u64,
    noise: Option<&str>,
    scale: f64,
    split_fraction: f64,
) -> PyResult<usize> {
    let cfg = desk();
    let noise = noise.map(parse::<NoiseSpec>).transpose()?;
    let lexicon = random_lexicon(&cfg.charset, cfg.lexicon_size, cfg.word_len.0, cfg.word_len.1, seed).map_err(err)?;
    let spec = CorpusSpec {
        seed,
        charset: cfg.charset.clone(),
        lexicon,
        count,
        regimes: ContrastRegime::standard_set(),
        noise,
        resolution_scale: scale,
        split_fraction,
        render: RenderOptions::default(),
    };
    py.detach(|| gen_corpus(&spec, &out_dir)).map(|m| m.records.len()).map_err(err)
}

/// Train a selector from automatically labeled corpus images.
#[pyfunction]
#[pyo3(signature = (corpus_dir, feature = "wavelet", c = None))]
fn train_selector(py: Python<'_>, corpus_dir: PathBuf, feature: &str, c: Option<f64>) -> PyResult<PySelector> {
    let mut cfg = desk();
    cfg.feature = parse(feature)?;
    if let Some(c) = c {
        cfg.svm_c = c;
    }
    cfg.validate().map_err(err)?;
    let model = py
        .detach(|| {
            let (_, items) = load_corpus(&corpus_dir.join(MANIFEST_FILE))?;
            let lexicon = Lexicon::load(&corpus_dir.join("lexicon.txt"))?;
            let train = split(&items, cfg.holdout).0;
            let labels = label_items(&train, &lexicon, &cfg)?;
            fit_selector(&train, &labels, cfg.feature, &cfg)
        })
        .map_err(err)?;
    Ok(PySelector { inner: model })
}

/// Train character models on the corpus training split.
#[pyfunction]
#[pyo3(signature = (corpus_dir, mode = "fixed:Y", selector = None, iters = None))]
fn train_hmm(
    py: Python<'_>,
    corpus_dir: PathBuf,
    mode: &str,
    selector: Option<&PySelector>,
    iters: Option<usize>,
) -> PyResult<PyModels> {
    let mut cfg = desk();
    if let Some(n) = iters {
        cfg.hmm.iters = n;
    }
    cfg.validate().map_err(err)?;
    let mode: SelectionMode = parse(mode)?;
    let sel = selector.map(|s| &s.inner);
    let models = py
        .detach(|| {
            let (_, items) = load_corpus(&corpus_dir.join(MANIFEST_FILE))?;
            let train = split(&items, cfg.holdout).0;
            let opts = ExtractOptions {
                spec: cfg.window,
                baseline: None,
            };
            let seqs = extract_all(&train, sel, mode, &opts)?;
            let texts: Vec<&str> = train.iter().map(|it| it.text.as_str()).collect();
            train_models(&seqs, &texts, &cfg).map(|(m, _)| m)
        })
        .map_err(err)?;
    Ok(PyModels { inner: models })
}

/// Accuracy, precision and recall over label strings such as `"+1 -1 ..."`.
#[pyfunction]
fn multilabel_metrics(truth: Vec<String>, pred: Vec<String>) -> PyResult<(f64, f64, f64)> {
    let t = truth.iter().map(|s| parse::<ChannelLabelVector>(s)).collect::<PyResult<Vec<_>>>()?;
    let p = pred.iter().map(|s| parse::<ChannelLabelVector>(s)).collect::<PyResult<Vec<_>>>()?;
    let m = ml_metrics(&t, &p).map_err(err)?;
    Ok((m.accuracy, m.precision, m.recall))
}

/// Word and character accuracy of hypotheses against transcripts.
#[pyfunction]
fn word_char_accuracy(truth: Vec<String>, hyp: Vec<String>) -> PyResult<(f64, f64)> {
    wc_accuracy(&truth, &hyp).map_err(err)
}

#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    lev(a, b)
}

#[pymodule]
fn chansel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PySelector>()?;
    m.add_class::<PyLexicon>()?;
    m.add_class::<PyModels>()?;
    m.add_function(wrap_pyfunction!(selection_descriptor, m)?)?;
    m.add_function(wrap_pyfunction!(extract_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train_selector, m)?)?;
    m.add_function(wrap_pyfunction!(train_hmm, m)?)?;
    m.add_function(wrap_pyfunction!(multilabel_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(word_char_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    Ok(())
}
