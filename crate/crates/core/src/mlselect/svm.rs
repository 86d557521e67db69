//! Binary soft-margin linear SVM solved in the dual by SMO with
//! second-order working-set selection.

use std::collections::HashMap;

const TAU: f64 = 1e-12;
const DEFAULT_EPS: f64 = 1e-5;
/// Gram matrices up to this many rows are precomputed in full.
const FULL_GRAM_ROWS: usize = 3000;
const COLUMN_CACHE_BYTES: usize = 96 << 20;

#[derive(Clone, Debug)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub alpha: Vec<f64>,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `½‖w‖² + C Σ max(0, 1 − y_i (w·x_i + b))`.
pub fn primal_objective(weights: &[f64], bias: f64, rows: &[&[f64]], labels: &[f64], c: f64) -> f64 {
    let reg = 0.5 * dot(weights, weights);
    let slack: f64 = rows
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - y * (dot(weights, x) + bias)).max(0.0))
        .sum();
    reg + c * slack
}

/// Kernel columns, either precomputed in full or computed on demand with a
/// bounded cache.
pub struct Gram<'a> {
    rows: &'a [&'a [f64]],
    diag: Vec<f64>,
    full: Option<Vec<f64>>,
}

impl<'a> Gram<'a> {
    pub fn new(rows: &'a [&'a [f64]]) -> Self {
        let n = rows.len();
        let diag = rows.iter().map(|r| dot(r, r)).collect();
        let full = (n <= FULL_GRAM_ROWS).then(|| {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = dot(rows[i], rows[j]);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Gram { rows, diag, full }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }
}

struct Columns<'g, 'a> {
    gram: &'g Gram<'a>,
    cache: HashMap<usize, Vec<f64>>,
    order: Vec<usize>,
    capacity: usize,
}

impl<'g, 'a> Columns<'g, 'a> {
    fn new(gram: &'g Gram<'a>) -> Self {
        let capacity = (COLUMN_CACHE_BYTES / (8 * gram.len().max(1))).max(2);
        Columns {
            gram,
            cache: HashMap::new(),
            order: Vec::new(),
            capacity,
        }
    }

    fn column(&mut self, i: usize) -> &[f64] {
        let n = self.gram.len();
        if let Some(full) = &self.gram.full {
            return &full[i * n..(i + 1) * n];
        }
        if !self.cache.contains_key(&i) {
            if self.cache.len() >= self.capacity {
                let evict = self.order.remove(0);
                self.cache.remove(&evict);
            }
            let xi = self.gram.rows[i];
            let col = self.gram.rows.iter().map(|r| dot(xi, r)).collect();
            self.cache.insert(i, col);
            self.order.push(i);
        }
        &self.cache[&i]
    }
}

/// Trains one binary classifier; labels must be ±1 and contain both signs.
pub fn train_binary(gram: &Gram<'_>, labels: &[f64], c: f64) -> BinarySvm {
    train_binary_eps(gram, labels, c, DEFAULT_EPS)
}

pub fn train_binary_eps(gram: &Gram<'_>, labels: &[f64], c: f64, eps: f64) -> BinarySvm {
    let n = gram.len();
    let y = labels;
    let qd = &gram.diag;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut columns = Columns::new(gram);
    let max_iter = (100 * n).max(10_000_000);
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;

    while iterations < max_iter {
        // Maximal violating index from the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        let ki: Vec<f64> = columns.column(i).to_vec();

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let q_it = y[i] * y[t] * ki[t];
            if y[t] > 0.0 {
                if !lower(alpha[t]) {
                    let diff = gmax + grad[t];
                    gmax2 = gmax2.max(grad[t]);
                    if diff > 0.0 {
                        let quad = qd[i] + qd[t] - 2.0 * y[i] * q_it;
                        let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            } else if !upper(alpha[t]) {
                let diff = gmax - grad[t];
                gmax2 = gmax2.max(-grad[t]);
                if diff > 0.0 {
                    let quad = qd[i] + qd[t] + 2.0 * y[i] * q_it;
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < eps {
            break;
        }
        iterations += 1;

        let q_ij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let kj = columns.column(j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let dim = gram.rows.first().map_or(0, |r| r.len());
    let mut weights = vec![0.0; dim];
    for (t, row) in gram.rows.iter().enumerate() {
        if alpha[t] != 0.0 {
            let s = alpha[t] * y[t];
            weights.iter_mut().zip(row.iter()).for_each(|(w, x)| *w += s * x);
        }
    }
    let scores: Vec<f64> = gram.rows.iter().map(|r| dot(&weights, r)).collect();
    let bias = optimal_bias(&scores, y, dual_bias(&alpha, &grad, y, c));
    BinarySvm {
        weights,
        bias,
        alpha,
        iterations,
    }
}

fn dual_bias(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Exact minimizer over `b` of the hinge sum for fixed scores `w·x_i`. The
/// sum is convex piecewise linear with knots at `y_i − s_i`; `fallback` is
/// kept unless some knot is strictly better.
fn optimal_bias(scores: &[f64], y: &[f64], fallback: f64) -> f64 {
    let mut pos: Vec<f64> = Vec::new();
    let mut neg: Vec<f64> = Vec::new();
    for (s, &yi) in scores.iter().zip(y) {
        if yi > 0.0 {
            pos.push(1.0 - s);
        } else {
            neg.push(-1.0 - s);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let prefix = |v: &[f64]| -> Vec<f64> {
        let mut p = Vec::with_capacity(v.len() + 1);
        p.push(0.0);
        for x in v {
            p.push(p.last().unwrap() + x);
        }
        p
    };
    let (pp, np) = (prefix(&pos), prefix(&neg));
    // Positive sample with knot k is active for b < k, negative for b > k.
    let hinge = |b: f64| -> f64 {
        let ip = pos.partition_point(|&k| k <= b);
        let in_ = neg.partition_point(|&k| k < b);
        let above = (pp[pos.len()] - pp[ip]) - b * (pos.len() - ip) as f64;
        let below = b * in_ as f64 - np[in_];
        above + below
    };
    let mut best_b = fallback;
    let mut best_v = hinge(fallback);
    for &k in pos.iter().chain(&neg) {
        let v = hinge(k);
        if v < best_v - 1e-12 * (1.0 + best_v.abs()) {
            best_v = v;
            best_b = k;
        }
    }
    best_b
}
