//! Forward and Viterbi passes over left-right chains in the log domain.
//!
//! A chain starts in state 0 and must end in its last state; each step
//! either stays or advances by one.

use super::gmm::log_add;

/// `emit[t][j]` is `log b_j(o_t)`.
pub fn forward_log(emit: &[Vec<f64>], log_self: &[f64], log_next: &[f64]) -> f64 {
    let n = log_self.len();
    let t_len = emit.len();
    if n == 0 || t_len < n {
        return f64::NEG_INFINITY;
    }
    let mut alpha = vec![f64::NEG_INFINITY; n];
    alpha[0] = emit[0][0];
    let mut next = vec![f64::NEG_INFINITY; n];
    for row in emit.iter().skip(1) {
        for j in 0..n {
            let stay = alpha[j] + log_self[j];
            let enter = if j > 0 {
                alpha[j - 1] + log_next[j - 1]
            } else {
                f64::NEG_INFINITY
            };
            next[j] = log_add(stay, enter) + row[j];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    alpha[n - 1]
}

/// Forward and backward lattices, `alpha[t][j]` and `beta[t][j]`.
pub(crate) fn forward_backward(
    emit: &[Vec<f64>],
    log_self: &[f64],
    log_next: &[f64],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = log_self.len();
    let t_len = emit.len();
    let mut alpha = vec![vec![f64::NEG_INFINITY; n]; t_len];
    let mut beta = vec![vec![f64::NEG_INFINITY; n]; t_len];
    if n == 0 || t_len == 0 {
        return (alpha, beta);
    }
    alpha[0][0] = emit[0][0];
    for t in 1..t_len {
        for j in 0..n {
            let stay = alpha[t - 1][j] + log_self[j];
            let enter = if j > 0 {
                alpha[t - 1][j - 1] + log_next[j - 1]
            } else {
                f64::NEG_INFINITY
            };
            alpha[t][j] = log_add(stay, enter) + emit[t][j];
        }
    }
    beta[t_len - 1][n - 1] = 0.0;
    for t in (0..t_len - 1).rev() {
        for j in 0..n {
            let stay = log_self[j] + emit[t + 1][j] + beta[t + 1][j];
            let advance = if j + 1 < n {
                log_next[j] + emit[t + 1][j + 1] + beta[t + 1][j + 1]
            } else {
                f64::NEG_INFINITY
            };
            beta[t][j] = log_add(stay, advance);
        }
    }
    (alpha, beta)
}

/// Best state path and its log score; `None` when no legal path exists.
pub fn viterbi_log(emit: &[Vec<f64>], log_self: &[f64], log_next: &[f64]) -> Option<(f64, Vec<usize>)> {
    let n = log_self.len();
    let t_len = emit.len();
    if n == 0 || t_len < n {
        return None;
    }
    let mut delta = vec![f64::NEG_INFINITY; n];
    delta[0] = emit[0][0];
    let mut next = vec![f64::NEG_INFINITY; n];
    // back[t][j] is true when state j at time t was entered from j - 1.
    let mut back = vec![vec![false; n]; t_len];
    for t in 1..t_len {
        for j in 0..n {
            let stay = delta[j] + log_self[j];
            let enter = if j > 0 {
                delta[j - 1] + log_next[j - 1]
            } else {
                f64::NEG_INFINITY
            };
            let from_prev = enter > stay;
            back[t][j] = from_prev;
            next[j] = if from_prev { enter } else { stay } + emit[t][j];
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let score = delta[n - 1];
    if score == f64::NEG_INFINITY || score.is_nan() {
        return None;
    }
    let mut path = vec![0; t_len];
    let mut j = n - 1;
    for t in (0..t_len).rev() {
        path[t] = j;
        if t > 0 && back[t][j] {
            j -= 1;
        }
    }
    Some((score, path))
}
