//! Diagonal-covariance Gaussian mixtures evaluated in the log domain.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianComponent {
    /// `log c − ½ Σ log(2π σ²)`, the part of the log density that does not
    /// depend on the observation.
    pub fn log_norm(&self) -> f64 {
        self.weight.ln() - 0.5 * self.var.iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>()
    }

    /// Weighted log density `log c + log N(x; μ, Σ)`.
    pub fn weighted_log_density(&self, x: &[f64]) -> f64 {
        self.log_norm() - 0.5 * mahalanobis(x, &self.mean, &self.var)
    }
}

fn mahalanobis(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| (x - m) * (x - m) / v)
        .sum()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gmm {
    pub components: Vec<GaussianComponent>,
}

impl Gmm {
    pub fn single(mean: Vec<f64>, var: Vec<f64>) -> Self {
        Gmm {
            components: vec![GaussianComponent {
                weight: 1.0,
                mean,
                var,
            }],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.prepared().log_density(x))
    }

    pub(crate) fn prepared(&self) -> PreparedGmm<'_> {
        PreparedGmm {
            gmm: self,
            norms: self.components.iter().map(|c| c.log_norm()).collect(),
            inv_var: self
                .components
                .iter()
                .map(|c| c.var.iter().map(|v| 1.0 / v).collect())
                .collect(),
        }
    }
}

/// A mixture with its constant terms and inverse variances cached for
/// repeated evaluation.
pub(crate) struct PreparedGmm<'a> {
    gmm: &'a Gmm,
    norms: Vec<f64>,
    inv_var: Vec<Vec<f64>>,
}

impl PreparedGmm<'_> {
    pub fn component_log_densities(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for ((c, norm), iv) in self.gmm.components.iter().zip(&self.norms).zip(&self.inv_var) {
            let mut q = 0.0;
            for ((xi, mi), ivi) in x.iter().zip(&c.mean).zip(iv) {
                let d = xi - mi;
                q += d * d * ivi;
            }
            out.push(norm - 0.5 * q);
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.norms.len());
        self.component_log_densities(x, &mut buf);
        log_sum_exp(&buf)
    }
}
