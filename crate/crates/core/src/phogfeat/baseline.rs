use crate::error::{Error, Result};
use crate::imagecore::ChannelPlane;

/// Polynomial text baseline `f(x) = Σ a_i x^i`, coefficients lowest degree
/// first.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselinePoly {
    pub coeffs: Vec<f64>,
}

impl BaselinePoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }
}

/// Least-squares polynomial fit. The abscissae are centered and scaled
/// before forming the normal equations, then mapped back.
pub fn fit_baseline(points: &[(f64, f64)], degree: usize) -> Result<BaselinePoly> {
    let n = degree + 1;
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < n {
        return Err(Error::RankDeficient(format!(
            "{} distinct x values for a degree {degree} fit",
            xs.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::RankDeficient("non-finite point".into()));
    }
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let scale = points
        .iter()
        .map(|p| (p.0 - mean).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for &(x, y) in points {
        let t = (x - mean) / scale;
        let mut powers = vec![1.0; n];
        for i in 1..n {
            powers[i] = powers[i - 1] * t;
        }
        for i in 0..n {
            aty[i] += powers[i] * y;
            for j in 0..n {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    let b = solve(ata, aty).ok_or_else(|| Error::RankDeficient("singular normal equations".into()))?;

    // Expand Σ b_k ((x - mean) / scale)^k into powers of x.
    let mut coeffs = vec![0.0; n];
    for (k, bk) in b.iter().enumerate() {
        let c = bk / scale.powi(k as i32);
        for j in 0..=k {
            coeffs[j] += c * binomial(k, j) as f64 * (-mean).powi((k - j) as i32);
        }
    }
    Ok(BaselinePoly { coeffs })
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * norm {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Per-column vertical centroid of the strongest 20% of gradient
/// magnitudes; columns without such pixels are skipped.
pub fn baseline_points(plane: &ChannelPlane) -> Vec<(f64, f64)> {
    let (w, h) = (plane.width(), plane.height());
    let mag = super::phog::sobel(plane).magnitude;
    let mut sorted: Vec<f64> = mag.iter().copied().filter(|&m| m > 0.0).collect();
    if sorted.is_empty() {
        return Vec::new();
    }
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[(sorted.len() as f64 * 0.8) as usize];
    let mut points = Vec::new();
    for x in 0..w {
        let (mut sum, mut count) = (0.0, 0usize);
        for y in 0..h {
            if mag[y * w + x] >= threshold {
                sum += y as f64;
                count += 1;
            }
        }
        if count > 0 {
            points.push((x as f64, sum / count as f64));
        }
    }
    points
}
