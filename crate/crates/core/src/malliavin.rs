//! Reduced Malliavin covariance `C_t = ∫_0^t Σ_i (Jinv V_i)(Jinv V_i)ᵀ ds`
//! along simulated paths, its smallest eigenvalue `Λ`, Monte Carlo tail
//! probabilities `P(Λ <= eps)` and truncated inverse moments.

use serde::Serialize;

use crate::dsl::VectorField;
use crate::engine::{Mode, PathObserver, Path, SimConfig, Simulator};
use crate::error::{Error, Result};
use crate::fields::FieldSystem;
use crate::linalg::Matrix;
use crate::rng::PathRng;
use crate::stats::{try_par_map, weighted_slope, McEstimate};

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    pub c: Matrix<f64>,
    pub t: f64,
    /// Smallest eigenvalue, clamped at zero.
    pub lambda_min: f64,
    /// Smallest eigenvalue before clamping.
    pub raw_lambda_min: f64,
}

impl CovarianceMatrix {
    fn new(c: Matrix<f64>, t: f64) -> Self {
        let raw = if c.dim() == 0 { 0.0 } else { c.symmetric_eigen().min() };
        Self { c, t, lambda_min: raw.max(0.0), raw_lambda_min: raw }
    }

    /// `uᵀ C u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let cu = self.c.matvec(u);
        u.iter().zip(&cu).map(|(a, b)| a * b).sum()
    }
}

/// Left-endpoint accumulation of `C_t` from streamed grid points.
pub struct CovarianceAccumulator<'a> {
    diffusion: &'a [VectorField],
    c: Matrix<f64>,
    prev: Option<(f64, Vec<f64>)>,
    v: Vec<f64>,
    w: Vec<f64>,
    t: f64,
    error: Option<Error>,
}

impl<'a> CovarianceAccumulator<'a> {
    pub fn new(diffusion: &'a [VectorField], e: usize) -> Self {
        Self {
            diffusion,
            c: Matrix::zeros(e),
            prev: None,
            v: vec![0.0; e],
            w: vec![0.0; e],
            t: 0.0,
            error: None,
        }
    }

    pub fn finish(self) -> Result<CovarianceMatrix> {
        if let Some(e) = self.error {
            return Err(e);
        }
        Ok(CovarianceMatrix::new(self.c, self.t))
    }
}

impl PathObserver for CovarianceAccumulator<'_> {
    fn observe(&mut self, t: f64, x: &[f64], jacobians: Option<(&Matrix<f64>, &Matrix<f64>)>) {
        let Some((_, jinv)) = jacobians else {
            self.error.get_or_insert(Error::invalid("path was simulated without Jacobians"));
            return;
        };
        if let Some((t_prev, contrib)) = &self.prev {
            let h = t - t_prev;
            for (c, p) in self.c.as_mut_slice().iter_mut().zip(contrib) {
                *c += p * h;
            }
        }
        self.t = t;
        // Σ_i (Jinv V_i)(Jinv V_i)ᵀ at this point, used on the next interval
        let e = x.len();
        let mut contrib = vec![0.0; e * e];
        for field in self.diffusion {
            if let Err(err) = field.eval_into(x, &[], t, &mut self.v) {
                self.error.get_or_insert(err.into());
                return;
            }
            let js = jinv.as_slice();
            for i in 0..e {
                self.w[i] = (0..e).map(|k| js[i * e + k] * self.v[k]).sum();
            }
            for i in 0..e {
                for j in 0..e {
                    contrib[i * e + j] += self.w[i] * self.w[j];
                }
            }
        }
        self.prev = Some((t, contrib));
    }
}

/// `C_T` of a recorded path by the left-endpoint rule.
pub fn reduced_covariance(path: &Path, diffusion: &[VectorField]) -> Result<CovarianceMatrix> {
    if path.j_inv.len() != path.grid.len() {
        return Err(Error::invalid("path was simulated without Jacobians"));
    }
    let e = path.x.first().map_or(0, Vec::len);
    let mut acc = CovarianceAccumulator::new(diffusion, e);
    for k in 0..path.grid.len() {
        acc.observe(path.grid[k], &path.x[k], Some((&path.j_fwd[k], &path.j_inv[k])));
    }
    acc.finish()
}

/// `Λ` (or `uᵀ C u` when a direction is given) for `n_paths` paths.
pub fn covariance_samples(
    system: &FieldSystem,
    x0: &[f64],
    cfg: &SimConfig,
    n_paths: usize,
    u: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let mut cfg = cfg.clone();
    cfg.record_jacobians = true;
    let sim = Simulator::new(system, &cfg)?;
    let e = system.state_dim();
    let u = match u {
        Some(u) => {
            if u.len() != e {
                return Err(Error::Dimension(format!("direction has {} coordinates, state has {e}", u.len())));
            }
            let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(n > 0.0) {
                return Err(Error::invalid("direction must be non-zero"));
            }
            Some(u.iter().map(|a| a / n).collect::<Vec<f64>>())
        }
        None => None,
    };
    try_par_map(n_paths, |i| {
        let mut rng = PathRng::new(cfg.seed, i);
        let mut acc = CovarianceAccumulator::new(&system.diffusion, e);
        sim.run(x0, &mut rng, i, Mode::Full, &mut acc)?;
        let c = acc.finish()?;
        Ok(match &u {
            Some(u) => c.quadratic_form(u),
            None => c.lambda_min,
        })
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TailEstimate {
    pub eps_grid: Vec<f64>,
    pub probs: Vec<McEstimate>,
    /// Slope of `log P` against `log eps`; `None` with fewer than two
    /// grid points having at least five hits.
    pub fitted_slope: Option<f64>,
    pub p_moment: Option<McEstimate>,
}

impl TailEstimate {
    /// Probabilities are non-increasing as `eps` decreases, up to `k`
    /// combined standard errors.
    pub fn monotone_within(&self, k: f64) -> bool {
        let mut idx: Vec<usize> = (0..self.eps_grid.len()).collect();
        idx.sort_by(|&a, &b| self.eps_grid[b].total_cmp(&self.eps_grid[a]));
        idx.windows(2).all(|w| {
            let (big, small) = (&self.probs[w[0]], &self.probs[w[1]]);
            small.mean <= big.mean + k * (big.se * big.se + small.se * small.se).sqrt()
        })
    }
}

fn check_eps_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("eps grid must be non-empty and positive"));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps grid must be strictly decreasing"));
    }
    Ok(())
}

/// Tail statistics of given samples.
pub fn tail_from_samples(samples: &[f64], eps_grid: &[f64], seed: u64) -> Result<TailEstimate> {
    check_eps_grid(eps_grid)?;
    let n = samples.len();
    let probs: Vec<McEstimate> = eps_grid
        .iter()
        .map(|&eps| McEstimate::from_hits(samples.iter().filter(|&&v| v <= eps).count(), n, seed))
        .collect();
    let (mut xs, mut ys, mut ws) = (vec![], vec![], vec![]);
    for (eps, p) in eps_grid.iter().zip(&probs) {
        let hits = (p.mean * n as f64).round();
        if hits >= 5.0 {
            xs.push(eps.ln());
            ys.push(p.mean.ln());
            // inverse variance of log p-hat
            ws.push(hits / (1.0 - p.mean).max(1.0 / n as f64));
        }
    }
    Ok(TailEstimate { eps_grid: eps_grid.to_vec(), probs, fitted_slope: weighted_slope(&xs, &ys, &ws), p_moment: None })
}

/// Monte Carlo `P(Λ <= eps)` (or `P(uᵀ C u <= eps)`) over a decreasing grid.
#[allow(clippy::too_many_arguments)]
pub fn tail_probability(
    system: &FieldSystem,
    x0: &[f64],
    cfg: &SimConfig,
    eps_grid: &[f64],
    n_paths: usize,
    u: Option<&[f64]>,
) -> Result<TailEstimate> {
    check_eps_grid(eps_grid)?;
    if n_paths < 100 {
        return Err(Error::invalid("tail probabilities need at least 100 paths"));
    }
    let samples = covariance_samples(system, x0, cfg, n_paths, u)?;
    tail_from_samples(&samples, eps_grid, cfg.seed)
}

/// `E[max(Λ, floor)^{-p}]` from given samples.
pub fn moment_from_samples(samples: &[f64], p: f64, floor: f64, seed: u64) -> Result<McEstimate> {
    if !(p >= 2.0) {
        return Err(Error::invalid("moment order p must be at least 2"));
    }
    if !(floor > 0.0) {
        return Err(Error::invalid("floor must be positive"));
    }
    let vals: Vec<f64> = samples.iter().map(|&l| l.max(floor).powf(-p)).collect();
    Ok(McEstimate::from_samples(&vals, seed))
}

/// Truncated inverse moment `E[max(Λ, floor)^{-p}]`.
pub fn inverse_moment(
    system: &FieldSystem,
    x0: &[f64],
    cfg: &SimConfig,
    p: f64,
    n_paths: usize,
    floor: f64,
) -> Result<McEstimate> {
    moment_from_samples(&[], p, floor, cfg.seed)?;
    let samples = covariance_samples(system, x0, cfg, n_paths, None)?;
    moment_from_samples(&samples, p, floor, cfg.seed)
}
