//! Flat start and embedded Baum-Welch re-estimation with mixture splitting.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::decode::forward_backward;
use super::gmm::{log_sum_exp, GaussianComponent, Gmm, VARIANCE_FLOOR};
use super::model::{concat_word_model, CharacterModel, HmmState, ModelSet};

const MIN_WEIGHT: f64 = 1e-5;
const MIN_SELF: f64 = 0.01;
const MAX_SELF: f64 = 0.99;
const SPLIT_OFFSET: f64 = 0.2;
const MIN_OCCUPANCY: f64 = 1e-10;
const CHUNKS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub states: usize,
    pub gaussians: usize,
    pub iters: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            states: 6,
            gaussians: 32,
            iters: 5,
        }
    }
}

/// Corpus log-likelihood of the model entering one EM iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub gaussians: usize,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub iterations: Vec<IterationRecord>,
    /// Log-likelihood of the returned model; `None` when no EM ran.
    pub final_log_likelihood: Option<f64>,
    /// Utterances shorter than their state chain, left out of training.
    pub skipped: usize,
    /// Variance entries raised to the floor during re-estimation.
    pub variance_floor_hits: usize,
}

impl TrainReport {
    /// Largest drop between consecutive likelihoods computed with the same
    /// mixture size, or 0 when the sequence never decreases.
    pub fn worst_decrease(&self) -> f64 {
        let mut lls: Vec<(usize, f64)> = self
            .iterations
            .iter()
            .map(|r| (r.gaussians, r.log_likelihood))
            .collect();
        if let (Some(f), Some(last)) = (self.final_log_likelihood, self.iterations.last()) {
            lls.push((last.gaussians, f));
        }
        lls.windows(2)
            .filter(|w| w[0].0 == w[1].0)
            .map(|w| w[1].1 - w[0].1)
            .fold(0.0, f64::min)
    }
}

struct Utterance<'a> {
    frames: &'a [Vec<f64>],
    /// Model index per character of the transcript.
    chars: Vec<usize>,
}

#[derive(Clone)]
struct StateAcc {
    occ: Vec<f64>,
    sum: Vec<Vec<f64>>,
    sq: Vec<Vec<f64>>,
    n_self: f64,
    n_next: f64,
}

impl StateAcc {
    fn new(components: usize, dim: usize) -> Self {
        StateAcc {
            occ: vec![0.0; components],
            sum: vec![vec![0.0; dim]; components],
            sq: vec![vec![0.0; dim]; components],
            n_self: 0.0,
            n_next: 0.0,
        }
    }

    fn merge(&mut self, other: &StateAcc) {
        for k in 0..self.occ.len() {
            self.occ[k] += other.occ[k];
            for (a, b) in self.sum[k].iter_mut().zip(&other.sum[k]) {
                *a += b;
            }
            for (a, b) in self.sq[k].iter_mut().zip(&other.sq[k]) {
                *a += b;
            }
        }
        self.n_self += other.n_self;
        self.n_next += other.n_next;
    }
}

struct Accumulator {
    states: Vec<StateAcc>,
    log_likelihood: f64,
}

/// Trains one model per charset symbol from word-level transcripts.
pub fn train_embedded<S, T>(
    corpus: &[(S, T)],
    charset: &str,
    opts: &TrainOptions,
) -> Result<(ModelSet, TrainReport)>
where
    S: AsRef<[Vec<f64>]> + Sync,
    T: AsRef<str> + Sync,
{
    if opts.states == 0 || opts.gaussians == 0 {
        return Err(Error::Config("states and gaussians must be positive".into()));
    }
    let symbols: Vec<char> = charset.chars().collect();
    if symbols.is_empty() {
        return Err(Error::InsufficientData("empty charset".into()));
    }
    let index = |c: char| symbols.iter().position(|&s| s == c).ok_or(Error::UnknownCharacter(c));

    let mut report = TrainReport::default();
    let mut utterances = Vec::new();
    let mut dim = None;
    for (seq, text) in corpus {
        let frames = seq.as_ref();
        let chars = text.as_ref().chars().map(index).collect::<Result<Vec<_>>>()?;
        if chars.is_empty() {
            return Err(Error::InsufficientData("empty transcript".into()));
        }
        for f in frames {
            let d = *dim.get_or_insert(f.len());
            if f.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: f.len(),
                });
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InsufficientData("non-finite observation".into()));
            }
        }
        if frames.len() < chars.len() * opts.states {
            report.skipped += 1;
            continue;
        }
        utterances.push(Utterance { frames, chars });
    }
    let dim = dim.ok_or_else(|| Error::InsufficientData("no observations".into()))?;
    for (i, s) in symbols.iter().enumerate() {
        if !utterances.iter().any(|u| u.chars.contains(&i)) {
            return Err(Error::InsufficientData(format!(
                "symbol {s:?} has no usable training utterance"
            )));
        }
    }

    let mut models = flat_start(&utterances, &symbols, opts.states, dim);
    if opts.iters == 0 {
        return Ok((models, report));
    }
    let mut mixtures = 1;
    loop {
        for _ in 0..opts.iters {
            let acc = accumulate(&models, &utterances);
            report.iterations.push(IterationRecord {
                gaussians: mixtures,
                log_likelihood: acc.log_likelihood,
            });
            report.variance_floor_hits += reestimate(&mut models, &acc);
        }
        if mixtures >= opts.gaussians {
            break;
        }
        mixtures = (mixtures * 2).min(opts.gaussians);
        for m in &mut models.models {
            for s in &mut m.states {
                while s.gmm.components.len() < mixtures {
                    split_heaviest(&mut s.gmm);
                }
            }
        }
        models.gaussians = mixtures;
    }
    report.final_log_likelihood = Some(accumulate(&models, &utterances).log_likelihood);
    Ok((models, report))
}

fn flat_start(utterances: &[Utterance], symbols: &[char], states: usize, dim: usize) -> ModelSet {
    let mut count = 0.0;
    let mut mean = vec![0.0; dim];
    for u in utterances {
        for f in u.frames {
            count += 1.0;
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; dim];
    for u in utterances {
        for f in u.frames {
            for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
    }
    var.iter_mut().for_each(|v| *v = (*v / count).max(VARIANCE_FLOOR));

    // Uniform segmentation: frame t of T goes to chain position floor(t·N/T).
    let n_states = symbols.len() * states;
    let mut seg_count = vec![0.0; n_states];
    let mut seg_visits = vec![0.0; n_states];
    let mut seg_sum = vec![vec![0.0; dim]; n_states];
    for u in utterances {
        let chain = u.chars.len() * states;
        let t_len = u.frames.len();
        for &c in &u.chars {
            for s in 0..states {
                seg_visits[c * states + s] += 1.0;
            }
        }
        for (t, f) in u.frames.iter().enumerate() {
            let p = t * chain / t_len;
            let id = u.chars[p / states] * states + p % states;
            seg_count[id] += 1.0;
            for (a, v) in seg_sum[id].iter_mut().zip(f) {
                *a += v;
            }
        }
    }
    let models = symbols
        .iter()
        .enumerate()
        .map(|(c, &symbol)| CharacterModel {
            symbol,
            states: (0..states)
                .map(|s| {
                    let id = c * states + s;
                    let m = if seg_count[id] > 0.0 {
                        seg_sum[id].iter().map(|v| v / seg_count[id]).collect()
                    } else {
                        mean.clone()
                    };
                    let self_prob = if seg_count[id] > 0.0 {
                        (1.0 - seg_visits[id] / seg_count[id]).clamp(MIN_SELF, MAX_SELF)
                    } else {
                        0.5
                    };
                    HmmState {
                        gmm: Gmm::single(m, var.clone()),
                        self_prob,
                    }
                })
                .collect(),
        })
        .collect();
    ModelSet::new(dim, 1, models)
}

fn accumulate(models: &ModelSet, utterances: &[Utterance]) -> Accumulator {
    let states = models.states_per_model();
    let prepared: Vec<Vec<_>> = models
        .models
        .iter()
        .map(|m| m.states.iter().map(|s| s.gmm.prepared()).collect())
        .collect();
    let fresh = || {
        models
            .models
            .iter()
            .flat_map(|m| m.states.iter())
            .map(|s| StateAcc::new(s.gmm.components.len(), models.dim))
            .collect::<Vec<_>>()
    };
    let chunk = utterances.len().div_ceil(CHUNKS).max(1);
    let partial: Vec<Accumulator> = utterances
        .par_chunks(chunk)
        .map(|group| {
            let mut acc = Accumulator {
                states: fresh(),
                log_likelihood: 0.0,
            };
            for u in group {
                accumulate_one(models, &prepared, states, u, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Accumulator {
        states: fresh(),
        log_likelihood: 0.0,
    };
    for p in &partial {
        total.log_likelihood += p.log_likelihood;
        for (a, b) in total.states.iter_mut().zip(&p.states) {
            a.merge(b);
        }
    }
    total
}

fn accumulate_one(
    models: &ModelSet,
    prepared: &[Vec<super::gmm::PreparedGmm<'_>>],
    states: usize,
    u: &Utterance,
    acc: &mut Accumulator,
) {
    let word: String = u.chars.iter().map(|&c| models.models[c].symbol).collect();
    let Ok(chain) = concat_word_model(models, &word) else {
        return;
    };
    let n = chain.len();
    let t_len = u.frames.len();
    let mut comp = vec![vec![Vec::new(); n]; t_len];
    let mut emit = vec![vec![0.0; n]; t_len];
    for (t, f) in u.frames.iter().enumerate() {
        for (j, &(mi, si)) in chain.origin.iter().enumerate() {
            prepared[mi][si].component_log_densities(f, &mut comp[t][j]);
            emit[t][j] = log_sum_exp(&comp[t][j]);
        }
    }
    let log_self = chain.log_self();
    let log_next = chain.log_next();
    let (alpha, beta) = forward_backward(&emit, &log_self, &log_next);
    let ll = alpha[t_len - 1][n - 1];
    if !ll.is_finite() {
        return;
    }
    acc.log_likelihood += ll;
    for t in 0..t_len {
        let f = &u.frames[t];
        for (j, &(mi, si)) in chain.origin.iter().enumerate() {
            let g = (alpha[t][j] + beta[t][j] - ll).exp();
            if g <= 0.0 {
                continue;
            }
            let sa = &mut acc.states[mi * states + si];
            for (k, &lc) in comp[t][j].iter().enumerate() {
                let r = g * (lc - emit[t][j]).exp();
                if r <= 0.0 {
                    continue;
                }
                sa.occ[k] += r;
                for ((s, q), v) in sa.sum[k].iter_mut().zip(sa.sq[k].iter_mut()).zip(f) {
                    *s += r * v;
                    *q += r * v * v;
                }
            }
            if t + 1 < t_len {
                let stay = alpha[t][j] + log_self[j] + emit[t + 1][j] + beta[t + 1][j] - ll;
                sa.n_self += stay.exp();
                if j + 1 < n {
                    let go = alpha[t][j] + log_next[j] + emit[t + 1][j + 1] + beta[t + 1][j + 1] - ll;
                    sa.n_next += go.exp();
                }
            }
        }
    }
}

/// M-step; returns how many variances were raised to the floor.
fn reestimate(models: &mut ModelSet, acc: &Accumulator) -> usize {
    let states = models.states_per_model();
    let mut hits = 0;
    for (mi, m) in models.models.iter_mut().enumerate() {
        for (si, s) in m.states.iter_mut().enumerate() {
            let sa = &acc.states[mi * states + si];
            let total: f64 = sa.occ.iter().sum();
            if total < MIN_OCCUPANCY {
                continue;
            }
            let weights = floored_weights(&sa.occ, MIN_WEIGHT);
            for (k, c) in s.gmm.components.iter_mut().enumerate() {
                c.weight = weights[k];
                let occ = sa.occ[k];
                if occ < MIN_OCCUPANCY {
                    continue;
                }
                for d in 0..c.mean.len() {
                    let mu = sa.sum[k][d] / occ;
                    let v = sa.sq[k][d] / occ - mu * mu;
                    c.mean[d] = mu;
                    c.var[d] = if v < VARIANCE_FLOOR {
                        hits += 1;
                        VARIANCE_FLOOR
                    } else {
                        v
                    };
                }
            }
            let trans = sa.n_self + sa.n_next;
            if trans > MIN_OCCUPANCY {
                s.self_prob = (sa.n_self / trans).clamp(MIN_SELF, MAX_SELF);
            }
        }
    }
    hits
}

/// Maximizes `Σ n_k log w_k` over the simplex with every `w_k ≥ floor`.
pub(crate) fn floored_weights(occ: &[f64], floor: f64) -> Vec<f64> {
    let k = occ.len();
    let mut pinned = vec![false; k];
    loop {
        let n_pinned = pinned.iter().filter(|&&p| p).count();
        let mass = 1.0 - floor * n_pinned as f64;
        let free: f64 = occ.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(o, _)| o).sum();
        let w: Vec<f64> = occ
            .iter()
            .zip(&pinned)
            .map(|(&o, &p)| if p { floor } else { mass * o / free })
            .collect();
        let mut changed = false;
        for i in 0..k {
            if !pinned[i] && w[i] < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            return w;
        }
    }
}

fn split_heaviest(gmm: &mut Gmm) {
    let heaviest = (0..gmm.components.len())
        .fold(0, |best, i| if gmm.components[i].weight > gmm.components[best].weight { i } else { best });
    let c = &mut gmm.components[heaviest];
    c.weight /= 2.0;
    let mut twin: GaussianComponent = c.clone();
    for d in 0..c.mean.len() {
        let offset = SPLIT_OFFSET * c.var[d].sqrt();
        c.mean[d] += offset;
        twin.mean[d] -= offset;
    }
    gmm.components.push(twin);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floored_weights_are_proportional_when_unconstrained() {
        let w = floored_weights(&[1.0, 3.0], 1e-5);
        assert!((w[0] - 0.25).abs() < 1e-15 && (w[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn floored_weights_pin_empty_components() {
        let w = floored_weights(&[0.0, 2.0, 2.0], 0.01);
        assert_eq!(w[0], 0.01);
        assert!((w[1] - 0.495).abs() < 1e-12);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_keeps_weight_mass() {
        let mut g = Gmm::single(vec![1.0, 2.0], vec![4.0, 1.0]);
        split_heaviest(&mut g);
        assert_eq!(g.components.len(), 2);
        assert_eq!(g.components[0].weight, 0.5);
        assert_eq!(g.components[0].mean, vec![1.4, 2.2]);
        assert_eq!(g.components[1].mean, vec![0.6, 1.8]);
    }

    #[test]
    fn iters_zero_returns_flat_start() {
        let corpus = vec![
            (vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], "ab".to_string()),
        ];
        let opts = TrainOptions {
            states: 2,
            gaussians: 4,
            iters: 0,
        };
        let (m, r) = train_embedded(&corpus, "ab", &opts).unwrap();
        assert!(r.iterations.is_empty());
        assert_eq!(m.models[0].states[0].gmm.components[0].mean, vec![0.0]);
        assert_eq!(m.models[1].states[1].gmm.components[0].mean, vec![3.0]);
        assert_eq!(m.models[0].states[0].gmm.components.len(), 1);
    }

    #[test]
    fn missing_symbol_is_insufficient() {
        let corpus = vec![(vec![vec![0.0]; 4], "a".to_string())];
        let r = train_embedded(&corpus, "ab", &TrainOptions { states: 1, gaussians: 1, iters: 1 });
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }
}
