//! Monte Carlo aggregation helpers. All reductions run over index-ordered
//! vectors so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Mean, standard error, sample count and the master seed of a Monte Carlo
/// quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub seed: u64,
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

impl McEstimate {
    pub fn from_samples(xs: &[f64], seed: u64) -> Self {
        let n = xs.len();
        let se = if n > 1 { (variance(xs) / n as f64).sqrt() } else { 0.0 };
        Self { mean: mean(xs), se, n, seed }
    }

    /// Probability estimate with a Wilson-score standard error (z = 1).
    pub fn from_hits(hits: usize, n: usize, seed: u64) -> Self {
        let (_, half) = wilson(hits, n, 1.0);
        Self { mean: hits as f64 / n as f64, se: half, n, seed }
    }
}

/// Wilson score interval: `(centre, half-width)` at `z` standard deviations.
pub fn wilson(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (centre, half)
}

/// Weighted least-squares slope of `ys` against `xs`. `None` with fewer than
/// two points or no spread in `xs`.
pub fn weighted_slope(xs: &[f64], ys: &[f64], ws: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Dvoretzky–Kiefer–Wolfowitz band half-width for `n` samples at level `alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Map over path indices in parallel, returning results in index order.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Fallible variant of [`par_map`]; the first error in index order wins.
pub fn try_par_map<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    let results: Vec<Result<T, E>> = par_map(n, f);
    results.into_iter().collect()
}
