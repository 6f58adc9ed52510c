//! Kernel density estimates of simulated endpoints.

use serde::{Deserialize, Serialize};

use crate::engine::{simulate_endpoints, SimConfig};
use crate::error::{Error, Result};
use crate::models;
use crate::stats::{mean, par_map, variance};

/// Product grid: `points[k]` equally spaced values on `[lo[k], hi[k]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn uniform_1d(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo: vec![lo], hi: vec![hi], points: vec![points] }
    }

    /// `mean ± width · sd` in every dimension.
    pub fn covering(samples: &[Vec<f64>], width: f64, points: usize) -> Result<Self> {
        let e = check_samples(samples, 1)?;
        let (mut lo, mut hi) = (vec![], vec![]);
        for k in 0..e {
            let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let (m, sd) = (mean(&col), variance(&col).sqrt());
            lo.push(m - width * sd);
            hi.push(m + width * sd);
        }
        Ok(Self { lo, hi, points: vec![points; e] })
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    fn validate(&self) -> Result<()> {
        let e = self.points.len();
        if e == 0 || self.lo.len() != e || self.hi.len() != e {
            return Err(Error::Dimension("grid bounds and point counts must have equal, non-zero length".into()));
        }
        for k in 0..e {
            if !(self.hi[k] > self.lo[k]) || self.points[k] < 2 {
                return Err(Error::invalid(format!("grid axis {k} needs hi > lo and at least 2 points")));
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|k| {
                let n = self.points[k];
                let h = (self.hi[k] - self.lo[k]) / (n - 1) as f64;
                (0..n).map(|i| self.lo[k] + h * i as f64).collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    /// One axis per dimension; values are stored row-major over their product.
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub n_samples: usize,
}

impl DensityEstimate {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.grid.len()];
        for k in (0..self.grid.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.grid[k + 1].len();
        }
        strides
    }

    /// Grid coordinates of the flat index `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.strides().iter().zip(&self.grid).map(|(s, axis)| axis[(i / s) % axis.len()]).collect()
    }

    /// Product trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        let mut vals = self.values.clone();
        for axis in self.grid.iter().rev() {
            let n = axis.len();
            let h = axis[1] - axis[0];
            let outer = vals.len() / n;
            vals = (0..outer)
                .map(|o| {
                    let row = &vals[o * n..(o + 1) * n];
                    h * (row.iter().sum::<f64>() - 0.5 * (row[0] + row[n - 1]))
                })
                .collect();
        }
        vals[0]
    }
}

fn check_samples(samples: &[Vec<f64>], min: usize) -> Result<usize> {
    if samples.len() < min {
        return Err(Error::invalid(format!("need at least {min} samples, got {}", samples.len())));
    }
    let e = samples[0].len();
    if e == 0 || samples.iter().any(|s| s.len() != e) {
        return Err(Error::Dimension("samples must share a non-zero dimension".into()));
    }
    Ok(e)
}

/// Silverman's rule `1.06 sd n^{-1/5}` per dimension.
pub fn silverman_bandwidth(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let e = check_samples(samples, 2)?;
    let n = samples.len() as f64;
    (0..e)
        .map(|k| {
            let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let sd = variance(&col).sqrt();
            if !(sd > 0.0) {
                return Err(Error::DegenerateVariance(k));
            }
            Ok(1.06 * sd * n.powf(-0.2))
        })
        .collect()
}

const MAX_KDE_DIM: usize = 3;

/// Gaussian product-kernel estimate on a grid. Samples are sorted before
/// use, so the result does not depend on their order.
pub fn kde(samples: &[Vec<f64>], grid: &GridSpec, bandwidth: Option<&[f64]>) -> Result<DensityEstimate> {
    let e = check_samples(samples, 100)?;
    grid.validate()?;
    if grid.dim() != e {
        return Err(Error::Dimension(format!("grid has {} axes, samples have {e}", grid.dim())));
    }
    if e > MAX_KDE_DIM {
        return Err(Error::Dimension(format!("density estimation supports up to {MAX_KDE_DIM} dimensions")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.iter().zip(b).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let bandwidth = match bandwidth {
        Some(b) => {
            if b.len() != e || b.iter().any(|&h| !(h > 0.0)) {
                return Err(Error::invalid("bandwidth needs one positive value per dimension"));
            }
            silverman_bandwidth(&sorted)?;
            b.to_vec()
        }
        None => silverman_bandwidth(&sorted)?,
    };
    let axes = grid.axes();
    let total: usize = grid.points.iter().product();
    let norm: f64 = bandwidth.iter().map(|h| h * (2.0 * std::f64::consts::PI).sqrt()).product::<f64>() * sorted.len() as f64;
    let mut est = DensityEstimate { grid: axes, values: vec![], bandwidth, n_samples: sorted.len() };
    let values = par_map(total, |i| {
        let x = est.point(i as usize);
        let mut acc = 0.0;
        for s in &sorted {
            let mut q = 0.0;
            for k in 0..e {
                let u = (x[k] - s[k]) / est.bandwidth[k];
                q += u * u;
            }
            acc += (-0.5 * q).exp();
        }
        acc / norm
    });
    est.values = values;
    Ok(est)
}

/// Max-abs central difference of the given order along any axis, divided
/// by the largest density value. A qualitative roughness indicator only.
pub fn smoothness_proxy(est: &DensityEstimate, order: u8) -> Result<f64> {
    if !(order == 1 || order == 2) {
        return Err(Error::invalid("order must be 1 or 2"));
    }
    if est.grid.iter().any(|a| a.len() < 5) {
        return Err(Error::invalid("smoothness proxy needs at least 5 points per axis"));
    }
    let peak = est.values.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Ok(0.0);
    }
    let strides = est.strides();
    let mut worst = 0.0f64;
    for (k, axis) in est.grid.iter().enumerate() {
        let h = axis[1] - axis[0];
        let s = strides[k];
        for i in 0..est.values.len() {
            let pos = (i / s) % axis.len();
            if pos == 0 || pos + 1 == axis.len() {
                continue;
            }
            let (l, c, r) = (est.values[i - s], est.values[i], est.values[i + s]);
            let d = if order == 1 { (r - l) / (2.0 * h) } else { (r - 2.0 * c + l) / (h * h) };
            worst = worst.max(d.abs());
        }
    }
    Ok(worst / peak)
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineComparison {
    pub l1_error: f64,
    pub baseline_mean: f64,
    pub baseline_variance: f64,
    pub estimate: DensityEstimate,
}

/// Exact law of `x_T` for `dx = a x dt + sigma dW`.
pub fn ou_moments(a: f64, sigma: f64, x0: f64, horizon: f64) -> (f64, f64) {
    let m = x0 * (a * horizon).exp();
    let v = if a == 0.0 {
        sigma * sigma * horizon
    } else {
        sigma * sigma * ((2.0 * a * horizon).exp() - 1.0) / (2.0 * a)
    };
    (m, v)
}

fn normal_pdf(x: f64, m: f64, v: f64) -> f64 {
    (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

/// Trapezoid `∫ |f − N(m, v)|` over a one-dimensional estimate's grid.
pub fn l1_distance_to_normal(est: &DensityEstimate, m: f64, v: f64) -> Result<f64> {
    if est.grid.len() != 1 {
        return Err(Error::Dimension("Gaussian baseline needs a one-dimensional estimate".into()));
    }
    let diff = DensityEstimate {
        values: est.grid[0].iter().zip(&est.values).map(|(&x, &f)| (f - normal_pdf(x, m, v)).abs()).collect(),
        ..est.clone()
    };
    Ok(diff.integral())
}

/// KDE of simulated `linear_additive` endpoints against the exact Gaussian,
/// as a trapezoid L1 distance on a 601-point grid spanning ±6 sd.
pub fn gaussian_baseline_compare(a: f64, sigma: f64, x0: f64, cfg: &SimConfig, n_paths: usize) -> Result<BaselineComparison> {
    let system = models::linear_additive(a, sigma)?;
    let samples = simulate_endpoints(&system, &[x0], cfg, n_paths)?;
    let (m, v) = ou_moments(a, sigma, x0, cfg.horizon);
    let sd = v.sqrt();
    let grid = GridSpec::uniform_1d(m - 6.0 * sd, m + 6.0 * sd, 601);
    let estimate = kde(&samples, &grid, None)?;
    let l1_error = l1_distance_to_normal(&estimate, m, v)?;
    Ok(BaselineComparison { l1_error, baseline_mean: m, baseline_variance: v, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| vec![StandardNormal.sample(&mut rng)]).collect()
    }

    #[test]
    fn degenerate_samples() {
        let s = vec![vec![1.0]; 200];
        assert!(matches!(kde(&s, &GridSpec::uniform_1d(0.0, 2.0, 11), None), Err(Error::DegenerateVariance(0))));
        assert!(kde(&normals(50, 0), &GridSpec::uniform_1d(0.0, 2.0, 11), None).is_err());
    }

    #[test]
    fn recovers_standard_normal() {
        let s = normals(100_000, 1);
        let est = kde(&s, &GridSpec::uniform_1d(-3.0, 3.0, 121), None).unwrap();
        for (x, f) in est.grid[0].iter().zip(&est.values) {
            assert!((f - normal_pdf(*x, 0.0, 1.0)).abs() <= 0.01);
        }
        let wide = kde(&s, &GridSpec::covering(&s, 6.0, 241).unwrap(), None).unwrap();
        let mass = wide.integral();
        assert!((0.95..=1.02).contains(&mass), "{mass}");
    }

    #[test]
    fn two_dimensional_mass() {
        let a = normals(2000, 2);
        let b = normals(2000, 3);
        let s: Vec<Vec<f64>> = a.iter().zip(&b).map(|(p, q)| vec![p[0], 2.0 * q[0]]).collect();
        let est = kde(&s, &GridSpec::covering(&s, 6.0, 61).unwrap(), None).unwrap();
        assert_eq!(est.values.len(), 61 * 61);
        assert!((0.95..=1.02).contains(&est.integral()));
        assert!(smoothness_proxy(&est, 1).unwrap() > 0.0);
    }

    #[test]
    fn proxy_oracles() {
        let axis: Vec<f64> = (0..401).map(|i| -4.0 + 0.02 * i as f64).collect();
        let mk = |values: Vec<f64>| DensityEstimate { grid: vec![axis.clone()], values, bandwidth: vec![1.0], n_samples: 0 };
        let flat = mk(vec![0.3; 401]);
        assert_eq!(smoothness_proxy(&flat, 1).unwrap(), 0.0);
        assert_eq!(smoothness_proxy(&flat, 2).unwrap(), 0.0);
        let pdf = mk(axis.iter().map(|&x| normal_pdf(x, 0.0, 1.0)).collect());
        let p1 = smoothness_proxy(&pdf, 1).unwrap();
        assert!((p1 / (-0.5f64).exp() - 1.0).abs() < 0.02);
        let p2 = smoothness_proxy(&pdf, 2).unwrap();
        assert!((p2 - 1.0).abs() < 0.02);
        let short = DensityEstimate { grid: vec![vec![0.0, 1.0, 2.0, 3.0]], values: vec![1.0; 4], bandwidth: vec![1.0], n_samples: 0 };
        assert!(smoothness_proxy(&short, 1).is_err());
        assert!(smoothness_proxy(&pdf, 3).is_err());
    }

    #[test]
    fn ou_baselines() {
        assert_eq!(ou_moments(0.0, 1.0, 0.0, 1.0), (0.0, 1.0));
        let (_, v) = ou_moments(-1.0, 1.0, 0.0, 1.0);
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((v - 0.432332).abs() < 1e-6);
    }

    #[test]
    fn baseline_compare_small() {
        let cfg = SimConfig { dt: 1e-2, seed: 4, ..SimConfig::default() };
        let r = gaussian_baseline_compare(-1.0, 1.0, 0.0, &cfg, 5000).unwrap();
        assert!(r.l1_error < 0.1, "{}", r.l1_error);
    }
}
