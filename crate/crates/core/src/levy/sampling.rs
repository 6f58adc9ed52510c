use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{power_law_mass, Density, LevyMeasure, Region};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_zero, QuadOptions};

/// Expected event counts above this abort sampling.
pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub mark: f64,
}

#[derive(Clone, Debug)]
enum Inverse {
    PowerLaw { kappa: f64 },
    Uniform,
    /// Cumulative masses at table nodes, refined by bisection.
    Table { density: LevyMeasure, nodes: Vec<f64>, cum: Vec<f64> },
}

/// Poisson sampler for the jumps whose marks fall in a region of finite mass.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    a: f64,
    b: f64,
    rate: f64,
    symmetric: bool,
    inverse: Inverse,
    pub max_events: usize,
}

impl JumpSampler {
    pub fn new(g: &LevyMeasure, region: Region) -> Result<Self> {
        let Some((a, b)) = g.magnitude_range(region) else {
            return Ok(Self::empty());
        };
        let sides = if g.symmetric { 2.0 } else { 1.0 };
        let (rate, inverse) = match &g.density {
            Density::PowerLaw { kappa } => {
                if a == 0.0 && *kappa >= 1.0 {
                    return Err(Error::invalid("jump sampling needs a region of finite mass"));
                }
                (sides * power_law_mass(*kappa, a, b), Inverse::PowerLaw { kappa: *kappa })
            }
            Density::Uniform { height } => (sides * height * (b - a), Inverse::Uniform),
            Density::Custom(_) => {
                let (nodes, cum) = custom_table(g, a, b)?;
                let rate = sides * cum[cum.len() - 1];
                (rate, Inverse::Table { density: g.clone(), nodes, cum })
            }
        };
        if !rate.is_finite() {
            return Err(Error::invalid("jump sampling needs a region of finite mass"));
        }
        Ok(Self { a, b, rate, symmetric: g.symmetric, inverse, max_events: DEFAULT_MAX_EVENTS })
    }

    fn empty() -> Self {
        Self { a: 0.0, b: 0.0, rate: 0.0, symmetric: false, inverse: Inverse::Uniform, max_events: DEFAULT_MAX_EVENTS }
    }

    /// Total intensity `G(region)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Jumps on `[0, horizon)` sorted by time.
    pub fn sample<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> Result<Vec<Jump>> {
        let expected = self.rate * horizon;
        if expected > self.max_events as f64 {
            return Err(Error::EventOverflow { expected, limit: self.max_events });
        }
        if !(expected > 0.0) {
            return Ok(Vec::new());
        }
        let poisson = Poisson::new(expected).map_err(|e| Error::invalid(e.to_string()))?;
        let count = poisson.sample(rng) as usize;
        let mut jumps = Vec::with_capacity(count);
        for _ in 0..count {
            let time = rng.random::<f64>() * horizon;
            let magnitude = self.magnitude(rng.random::<f64>())?;
            let mark = if self.symmetric && rng.random::<bool>() { -magnitude } else { magnitude };
            jumps.push(Jump { time, mark });
        }
        jumps.sort_by(|p, q| p.time.total_cmp(&q.time));
        Ok(jumps)
    }

    /// Inverse CDF of the normalised magnitude law on `[a, b]`.
    pub fn magnitude(&self, u: f64) -> Result<f64> {
        let (a, b) = (self.a, self.b);
        Ok(match &self.inverse {
            Inverse::Uniform => a + u * (b - a),
            Inverse::PowerLaw { kappa } => {
                if (kappa - 1.0).abs() < 1e-12 {
                    a * (b / a).powf(u)
                } else {
                    let p = 1.0 - kappa;
                    let (ap, bp) = (a.powf(p), b.powf(p));
                    (ap - u * (ap - bp)).powf(1.0 / p)
                }
            }
            Inverse::Table { density, nodes, cum } => {
                let target = u * cum[cum.len() - 1];
                let k = cum.partition_point(|&c| c < target).clamp(1, nodes.len() - 1);
                let (mut lo, mut hi) = (nodes[k - 1], nodes[k]);
                let base = cum[k - 1];
                let start = lo;
                let opts = QuadOptions::with_rel_tol(1e-10);
                for _ in 0..48 {
                    let mid = 0.5 * (lo + hi);
                    let m = partial_mass(density, start, mid, &opts)?;
                    if base + m < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
        .clamp(a, b))
    }
}

fn partial_mass(g: &LevyMeasure, lo: f64, hi: f64, opts: &QuadOptions) -> Result<f64> {
    if lo == 0.0 {
        let out = integrate_to_zero(
            |r, o| {
                o[0] = g.density(r)?;
                Ok(())
            },
            hi,
            1,
            opts,
        )?;
        return Ok(out.value[0]);
    }
    let mut failure = None;
    let (v, _) = integrate(
        |r| match g.density(r) {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        opts,
    )?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(v),
    }
}

fn custom_table(g: &LevyMeasure, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    const N: usize = 256;
    let nodes: Vec<f64> = if a > 0.0 {
        let ratio = (b / a).ln();
        (0..=N).map(|i| a * (ratio * i as f64 / N as f64).exp()).collect()
    } else {
        (0..=N).map(|i| b * i as f64 / N as f64).collect()
    };
    let opts = QuadOptions::with_rel_tol(1e-10);
    let mut cum = Vec::with_capacity(nodes.len());
    cum.push(0.0);
    for w in nodes.windows(2) {
        let m = partial_mass(g, w[0], w[1], &opts)?;
        cum.push(cum[cum.len() - 1] + m);
    }
    Ok((nodes, cum))
}

/// Jumps with `|mark| > cut` on `[0, horizon)`.
pub fn sample_jumps<R: Rng + ?Sized>(g: &LevyMeasure, cut: f64, horizon: f64, rng: &mut R) -> Result<Vec<Jump>> {
    JumpSampler::new(g, Region::Above(cut))?.sample(horizon, rng)
}
