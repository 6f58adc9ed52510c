//! Monte Carlo harnesses for the exponential martingale inequality, the
//! Norris-type decay estimate and the longest-interval distribution.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dsl::{parse_expr, Expr, Tape, Var};
use crate::error::{Error, Result};
use crate::levy::{JumpSampler, LevyMeasure, Region};
use crate::quad::QuadOptions;
use crate::rng::{purpose, stream};
use crate::stats::{par_map, try_par_map, McEstimate};

/// `2 exp(−δ² / (2 (A δ + ρ)))`.
pub fn emi_bound(jump_bound: f64, delta: f64, rho: f64) -> f64 {
    2.0 * (-delta * delta / (2.0 * (jump_bound * delta + rho))).exp()
}

/// A deterministic integrand `f(t, y)` compensated against `G` on `|y| > cut`.
#[derive(Clone, Debug)]
pub struct EmiInstance {
    pub integrand: Expr,
    pub measure: Arc<LevyMeasure>,
    /// `A`: must strictly dominate `|f|`.
    pub jump_bound: f64,
    pub delta: f64,
    pub rho: f64,
    pub horizon: f64,
    pub cut: f64,
    /// Grid steps for the compensator.
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmiResult {
    pub empirical: McEstimate,
    pub bound: f64,
    /// `⟨M⟩_T`, deterministic for a deterministic integrand.
    pub bracket: f64,
    /// Largest `|f|` found on the check grid.
    pub sup_integrand: f64,
}

impl EmiInstance {
    pub fn new(
        integrand: &str,
        measure: Arc<LevyMeasure>,
        jump_bound: f64,
        delta: f64,
        rho: f64,
        horizon: f64,
        cut: f64,
    ) -> Result<Self> {
        let integrand = parse_expr(integrand, 0, 1)?;
        let inst = Self { integrand, measure, jump_bound, delta, rho, horizon, cut, steps: 1000 };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jump_bound > 0.0 && self.delta > 0.0 && self.rho > 0.0) {
            return Err(Error::invalid("A, delta and rho must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if !(self.cut >= 0.0) || self.steps == 0 {
            return Err(Error::invalid("cut must be non-negative and steps positive"));
        }
        Ok(())
    }

    /// Largest `|f|` on a 101 × 401 grid of times and marks. Errors when it
    /// reaches `A`.
    pub fn check_bound(&self) -> Result<f64> {
        let tape = Tape::compile(&self.integrand);
        let (lo, hi) = self.measure.support();
        let lo = lo.max(self.cut);
        let mut sup = 0.0f64;
        for i in 0..=100 {
            let t = self.horizon * i as f64 / 100.0;
            for j in 0..=400 {
                let r = lo + (hi - lo) * j as f64 / 400.0;
                let mut marks = vec![r];
                if self.measure.symmetric() {
                    marks.push(-r);
                }
                for y in marks {
                    let v = tape.eval(&[], &[y], t)?;
                    if !v.is_finite() {
                        return Err(Error::BoundViolated { found: v.abs(), bound: self.jump_bound });
                    }
                    sup = sup.max(v.abs());
                }
            }
        }
        if sup >= self.jump_bound {
            return Err(Error::BoundViolated { found: sup, bound: self.jump_bound });
        }
        Ok(sup)
    }

    fn mark_integral_on_grid(&self, tape: &Tape, power: i32) -> Result<Vec<f64>> {
        let grid = self.grid();
        let opts = QuadOptions::default();
        let at = |t: f64| -> Result<f64> {
            let out = self.measure.integrate(
                Region::Above(self.cut),
                1,
                |y, o| {
                    o[0] = tape.eval(&[], &[y], t)?.powi(power);
                    Ok(())
                },
                &opts,
            )?;
            Ok(out.value[0])
        };
        if self.integrand.depends_on(Var::T) {
            grid.iter().map(|&t| at(t)).collect()
        } else {
            Ok(vec![at(0.0)?; grid.len()])
        }
    }

    fn grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.horizon * k as f64 / self.steps as f64).collect()
    }
}

/// Trapezoid running integral of grid values.
fn cumulative(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for k in 1..grid.len() {
        out[k] = out[k - 1] + 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
    }
    out
}

/// Fraction of paths with `sup_s |M_s| >= δ` and `⟨M⟩_T < ρ`.
///
/// `M` jumps by `f(t_i, y_i)` at the sampled marks and drifts by minus the
/// compensator, which is piecewise linear on the grid; its extremes are
/// therefore attained at grid points or on either side of a jump.
pub fn emi_experiment(inst: &EmiInstance, n_paths: usize, seed: u64) -> Result<EmiResult> {
    inst.validate()?;
    let sup_integrand = inst.check_bound()?;
    let tape = Tape::compile(&inst.integrand);
    let grid = inst.grid();
    let comp = cumulative(&grid, &inst.mark_integral_on_grid(&tape, 1)?);
    let bracket = *cumulative(&grid, &inst.mark_integral_on_grid(&tape, 2)?).last().unwrap_or(&0.0);
    let sampler = JumpSampler::new(&inst.measure, Region::Above(inst.cut))?;
    let h = inst.horizon / inst.steps as f64;
    let comp_at = |t: f64| -> f64 {
        let k = ((t / h) as usize).min(inst.steps - 1);
        let w = (t - grid[k]) / h;
        comp[k] + w * (comp[k + 1] - comp[k])
    };
    let bound = emi_bound(inst.jump_bound, inst.delta, inst.rho);
    let hits = try_par_map(n_paths, |i| -> Result<bool> {
        if bracket >= inst.rho {
            return Ok(false);
        }
        let mut rng = stream(seed, purpose::JUMPS, i);
        let jumps = sampler.sample(inst.horizon, &mut rng)?;
        let mut sum = 0.0;
        let mut sup = 0.0f64;
        let mut next = 0;
        for (k, &t) in grid.iter().enumerate() {
            while next < jumps.len() && jumps[next].time <= t {
                let jt = jumps[next].time;
                let c = comp_at(jt);
                sup = sup.max((sum - c).abs());
                sum += tape.eval(&[], &[jumps[next].mark], jt)?;
                sup = sup.max((sum - c).abs());
                next += 1;
            }
            sup = sup.max((sum - comp[k]).abs());
        }
        Ok(sup >= inst.delta)
    })?;
    let count = hits.iter().filter(|&&h| h).count();
    Ok(EmiResult { empirical: McEstimate::from_hits(count, n_paths, seed), bound, bracket, sup_integrand })
}

/// Coefficients and parameters of a Norris-type instance. Coefficients are
/// expressions in `t`, the state `x1 = a`, `x2 = Y` and, for the jump
/// integrands, the mark `y1`.
#[derive(Clone, Debug)]
pub struct NorrisInstance {
    pub drift_a: Expr,
    pub noise_a: Vec<Expr>,
    pub noise_y: Vec<Expr>,
    pub jump_a: Expr,
    pub jump_y: Expr,
    pub measure: Option<Arc<LevyMeasure>>,
    /// Initial value of `a`.
    pub a0_init: f64,
    /// Initial value of `Y`.
    pub y0_init: f64,
    /// Hölder exponent of the dominating functions `φ(y) = |y|`.
    pub alpha_holder: f64,
    pub delta: f64,
    pub q: f64,
    pub r: f64,
    pub v: f64,
    pub w: f64,
    pub l: f64,
    pub t0: f64,
    pub dt: f64,
    pub cut: f64,
    pub max_events: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NorrisRow {
    pub eps: f64,
    /// Mark window `eps^z`.
    pub window: f64,
    pub lhs_prob: McEstimate,
}

impl NorrisInstance {
    /// Instance with zero coefficients, `d` Brownian motions and the given
    /// exponents; callers fill in the coefficients.
    pub fn zero(d: usize) -> Self {
        Self {
            drift_a: Expr::zero(),
            noise_a: vec![Expr::zero(); d],
            noise_y: vec![Expr::zero(); d],
            jump_a: Expr::zero(),
            jump_y: Expr::zero(),
            measure: None,
            a0_init: 0.0,
            y0_init: 0.0,
            alpha_holder: 0.5,
            delta: 1.5,
            q: 9.0,
            r: 0.03,
            v: 0.03,
            w: 0.3,
            l: 1.0,
            t0: 1.0,
            dt: 1e-3,
            cut: 1e-4,
            max_events: crate::levy::DEFAULT_MAX_EVENTS,
        }
    }

    /// Parse one coefficient string; `with_mark` admits `y1`.
    pub fn parse_coefficient(text: &str, with_mark: bool) -> Result<Expr> {
        Ok(parse_expr(text, 2, usize::from(with_mark))?)
    }

    /// Jump-measure exponent `κ`; `n` when there is no measure.
    pub fn kappa(&self) -> f64 {
        self.measure.as_ref().map_or(1.0, |g| g.kappa())
    }

    /// `z = 3δ / (κ − n + α)`.
    pub fn z(&self) -> f64 {
        3.0 * self.delta / (self.kappa() - 1.0 + self.alpha_holder)
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_a.len() != self.noise_y.len() {
            return Err(Error::Dimension("noise coefficients of a and Y must have the same length".into()));
        }
        if !(self.q > 8.0) {
            return Err(Error::invalid(format!("q = {} must exceed 8", self.q)));
        }
        let (r, v, w, l) = (self.r, self.v, self.w, self.l);
        if !(r > 0.0 && v > 0.0 && w > 0.0 && l > 0.0) {
            return Err(Error::invalid("r, v, w and l must be positive"));
        }
        if !(18.0 * r + 9.0 * v < self.q - 8.0) {
            return Err(Error::invalid(format!("need 18r + 9v < q − 8, got {} >= {}", 18.0 * r + 9.0 * v, self.q - 8.0)));
        }
        if !(self.alpha_holder > 0.0 && self.delta > 0.0) {
            return Err(Error::invalid("alpha_holder and delta must be positive"));
        }
        let excess = self.kappa() - 1.0;
        if excess < 0.0 {
            return Err(Error::invalid(format!("kappa = {} must be >= n = 1", self.kappa())));
        }
        let needed = (self.q / 2.0 - r + v / 2.0).max((excess + self.alpha_holder) / (4.0 * self.alpha_holder));
        if !(self.delta / w > needed) {
            return Err(Error::invalid(format!("need delta / w > {needed}, got {}", self.delta / w)));
        }
        let jumps = !self.jump_a.is_zero() || !self.jump_y.is_zero();
        if jumps {
            if self.measure.is_none() {
                return Err(Error::invalid("jump coefficients need a jump measure"));
            }
            // φ(y) = |y| must be O(|y|^{κ − n + α}) at the origin
            if excess + self.alpha_holder > 1.0 {
                return Err(Error::invalid(format!(
                    "|y| is not dominated by |y|^{} near zero",
                    excess + self.alpha_holder
                )));
            }
        }
        if !(self.t0 > 0.0 && self.dt > 0.0 && self.dt <= self.t0 && self.cut > 0.0) {
            return Err(Error::invalid("need t0 > 0, 0 < dt <= t0 and cut > 0"));
        }
        Ok(())
    }
}

/// `∫_region h(t, y, state) G(dy)`, constant when `h` ignores `t` and the state.
enum MarkIntegral {
    Zero,
    Constant(f64),
    Dynamic(Tape, Region),
}

impl MarkIntegral {
    fn new(expr: &Expr, g: Option<&LevyMeasure>, region: Option<Region>) -> Result<Self> {
        let (Some(g), Some(region)) = (g, region) else {
            return Ok(MarkIntegral::Zero);
        };
        if expr.is_zero() {
            return Ok(MarkIntegral::Zero);
        }
        let tape = Tape::compile(expr);
        if expr.depends_on_state() || expr.depends_on(Var::T) {
            return Ok(MarkIntegral::Dynamic(tape, region));
        }
        Ok(MarkIntegral::Constant(mark_integral(g, &tape, region, 0.0, &[0.0, 0.0])?))
    }

    fn at(&self, g: Option<&LevyMeasure>, t: f64, state: &[f64]) -> Result<f64> {
        match (self, g) {
            (MarkIntegral::Zero, _) | (_, None) => Ok(0.0),
            (MarkIntegral::Constant(c), _) => Ok(*c),
            (MarkIntegral::Dynamic(tape, region), Some(g)) => mark_integral(g, tape, *region, t, state),
        }
    }
}

fn mark_integral(g: &LevyMeasure, tape: &Tape, region: Region, t: f64, state: &[f64]) -> Result<f64> {
    let out = g.integrate(
        region,
        1,
        |y, o| {
            o[0] = tape.eval(state, &[y], t)?;
            Ok(())
        },
        &QuadOptions::default(),
    )?;
    Ok(out.value[0])
}

/// For each `eps`, the probability that `∫ Y² dt < eps^{qw}` while
/// `∫ (|a − ∫_{|y|<eps^z} f G|² + |u|²) dt >= l eps^w`.
///
/// Jumps with marks in `(cut, eps^z)` are simulated and compensated; those
/// below `cut` are dropped together with their compensator. Paths reuse the
/// same random streams across `eps`.
pub fn norris_experiment(inst: &NorrisInstance, eps_grid: &[f64], n_paths: usize, seed: u64) -> Result<Vec<NorrisRow>> {
    inst.validate()?;
    if eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::invalid("eps values must lie in (0, 1)"));
    }
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be positive"));
    }
    let g = inst.measure.as_deref();
    let z = inst.z();
    let drift = Tape::compile(&inst.drift_a);
    let noise_a: Vec<Tape> = inst.noise_a.iter().map(Tape::compile).collect();
    let noise_y: Vec<Tape> = inst.noise_y.iter().map(Tape::compile).collect();
    let jump_a = Tape::compile(&inst.jump_a);
    let jump_y = Tape::compile(&inst.jump_y);
    let has_jumps = !inst.jump_a.is_zero() || !inst.jump_y.is_zero();
    let steps = (inst.t0 / inst.dt).ceil() as usize;
    let h = inst.t0 / steps as f64;
    let d = inst.noise_a.len();

    eps_grid
        .iter()
        .map(|&eps| {
            let window = eps.powf(z);
            let small = eps.powf(inst.q * inst.w);
            let large = inst.l * eps.powf(inst.w);
            let band = (has_jumps && window > inst.cut).then_some(Region::Band { lo: inst.cut, hi: window });
            let comp_a = MarkIntegral::new(&inst.jump_a, g, band)?;
            let comp_y = MarkIntegral::new(&inst.jump_y, g, band)?;
            let centre = MarkIntegral::new(&inst.jump_y, g, has_jumps.then_some(Region::Below(window)))?;
            let sampler = match (band, g) {
                (Some(region), Some(g)) => {
                    let mut s = JumpSampler::new(g, region)?;
                    s.max_events = inst.max_events;
                    Some(s)
                }
                _ => None,
            };
            let hits = try_par_map(n_paths, |i| -> Result<bool> {
                let mut bm = stream(seed, purpose::BROWNIAN, i);
                let jumps = match &sampler {
                    Some(s) => s.sample(inst.t0, &mut stream(seed, purpose::JUMPS, i))?,
                    None => Vec::new(),
                };
                let mut state = [inst.a0_init, inst.y0_init];
                let (mut first, mut second) = (0.0, 0.0);
                let mut next = 0;
                let mut dw = vec![0.0; d];
                for k in 0..steps {
                    let t = k as f64 * h;
                    let [a, y] = state;
                    let mut u_sq = 0.0;
                    let mut da = drift.eval(&state, &[], t)? * h;
                    let mut dy = a * h;
                    for (j, w) in dw.iter_mut().enumerate() {
                        *w = bm.sample::<f64, _>(StandardNormal) * h.sqrt();
                        let uj = noise_y[j].eval(&state, &[], t)?;
                        u_sq += uj * uj;
                        da += noise_a[j].eval(&state, &[], t)? * *w;
                        dy += uj * *w;
                    }
                    let shift = a - centre.at(g, t, &state)?;
                    first += y * y * h;
                    second += (shift * shift + u_sq) * h;
                    da -= comp_a.at(g, t, &state)? * h;
                    dy -= comp_y.at(g, t, &state)? * h;
                    let t1 = t + h;
                    while next < jumps.len() && jumps[next].time < t1 {
                        let mark = [jumps[next].mark];
                        da += jump_a.eval(&state, &mark, t)?;
                        dy += jump_y.eval(&state, &mark, t)?;
                        next += 1;
                    }
                    state = [a + da, y + dy];
                }
                Ok(first < small && second >= large)
            })?;
            let count = hits.iter().filter(|&&b| b).count();
            Ok(NorrisRow { eps, window, lhs_prob: McEstimate::from_hits(count, n_paths, seed) })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalCdf {
    /// `Σ_{i=1}^m (−1)^i C(m, i) (1 − i x/t0)_+^{i−1}`, as printed.
    pub printed: f64,
    /// `Σ_{j=0}^{m+1} (−1)^j C(m+1, j) (1 − j x/t0)_+^m`.
    pub standard: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `u_+^k`, with `u_+^0 = 1{u > 0}`.
fn positive_power(u: f64, k: usize) -> f64 {
    if u > 0.0 {
        u.powi(k as i32)
    } else {
        0.0
    }
}

/// CDF of the longest of the `m + 1` gaps cut from `[0, t0]` by `m`
/// uniform points, by the printed formula and by the classical one.
pub fn longest_interval_cdf(m: usize, t0: f64, x: f64) -> Result<IntervalCdf> {
    if m == 0 || !(t0 > 0.0) || !(0.0..=t0).contains(&x) {
        return Err(Error::invalid(format!("need m >= 1 and 0 <= x <= t0, got m = {m}, x = {x}, t0 = {t0}")));
    }
    let s = x / t0;
    let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let printed = (1..=m).map(|i| sign(i) * binomial(m, i) * positive_power(1.0 - i as f64 * s, i - 1)).sum();
    // m + 1 gaps of length <= x cannot cover [0, t0] when (m + 1) x <= t0
    let standard = if s * (m + 1) as f64 <= 1.0 {
        0.0
    } else {
        let sum: f64 = (0..=m + 1).map(|j| sign(j) * binomial(m + 1, j) * positive_power(1.0 - j as f64 * s, m)).sum();
        sum.clamp(0.0, 1.0)
    };
    Ok(IntervalCdf { printed, standard })
}

/// Sorted longest gaps of `n` independent replications.
pub fn longest_interval_samples(m: usize, t0: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut out = par_map(n, |i| {
        let mut rng = stream(seed, purpose::SAMPLING, i);
        let mut pts: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * t0).collect();
        pts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        let mut longest = 0.0f64;
        for p in pts.iter().chain(std::iter::once(&t0)) {
            longest = longest.max(p - prev);
            prev = *p;
        }
        longest
    });
    out.sort_by(f64::total_cmp);
    out
}

/// Fraction of sorted samples `<= x`.
pub fn empirical_cdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}
