//! Euler–Maruyama simulation of the state together with its forward and
//! inverse Jacobian flows.
//!
//! Between events, with big-jump compensator `Ȳ_c(x) = ∫_{|y|>cut} Y(x,y) G(dy)`:
//!
//! ```text
//! x    <- x + (Z − Ȳ_c) Δ + Σ V_i ΔW_i
//! J    <- J + (DZ − M0) J Δ + Σ DV_i J ΔW_i
//! Jinv <- Jinv − Jinv (DZ − Σ DV_i² − M2) Δ + Jinv M1 Δ − Σ Jinv DV_i ΔW_i
//! ```
//!
//! where `D = D_1 Y(x, y)`, `M0 = ∫ D G`, `M1 = ∫ (I+D)^{-1} D G` and
//! `M2 = ∫ (I+D)^{-1} D² G`, all over `|y| > cut`. At a jump `(t, y)` the
//! pre-jump state is used: `x <- x + Y(x−, y)`, `J <- (I+D) J`,
//! `Jinv <- Jinv (I+D)^{-1}`. The inverse flow is integrated from its own
//! equation, not by inverting `J`, so `Jinv·J − I` measures discretisation
//! error.
//!
//! Jumps with `|y| < cut` are dropped together with their compensator,
//! optionally replaced by a Gaussian term with per-coordinate variance
//! `∫_{|y|<cut} Y_i² G(dy)` (state only).

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldSystem;
use crate::levy::{Jump, JumpSampler, Region, DEFAULT_MAX_EVENTS};
use crate::linalg::Matrix;
use crate::quad::QuadOptions;
use crate::rng::{purpose, stream, PathRng, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Horizon `T`.
    pub horizon: f64,
    /// Base step.
    pub dt: f64,
    /// Jump truncation level on `|y|`.
    pub cut: f64,
    pub seed: u64,
    pub gaussian_smalljump_correction: bool,
    pub record_jacobians: bool,
    pub max_events: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: 1e-3,
            cut: 0.01,
            seed: 0,
            gaussian_smalljump_correction: false,
            record_jacobians: true,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("/sim/horizon", "must be positive and finite"));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::config("/sim/dt", "must satisfy 0 < dt <= horizon"));
        }
        if !(self.cut > 0.0) {
            return Err(Error::config("/sim/cut", "must be positive"));
        }
        Ok(())
    }

    /// Base grid `0, dt, 2dt, ..., T` (last step shortened).
    pub fn base_grid(&self) -> Vec<f64> {
        let n = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut g: Vec<f64> = (0..n).map(|k| k as f64 * self.dt).collect();
        g.push(self.horizon);
        g
    }
}

/// Receives the càdlàg path at every grid point, starting at `t = 0`.
pub trait PathObserver {
    fn observe(&mut self, t: f64, x: &[f64], jacobians: Option<(&Matrix<f64>, &Matrix<f64>)>);
}

impl<F: FnMut(f64, &[f64], Option<(&Matrix<f64>, &Matrix<f64>)>)> PathObserver for F {
    fn observe(&mut self, t: f64, x: &[f64], jacobians: Option<(&Matrix<f64>, &Matrix<f64>)>) {
        self(t, x, jacobians)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    /// Base grid merged with jump times.
    pub grid: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    /// `J_{t<-0}`; empty unless Jacobians were recorded.
    pub j_fwd: Vec<Matrix<f64>>,
    /// `J_{0<-t}`; empty unless Jacobians were recorded.
    pub j_inv: Vec<Matrix<f64>>,
    pub jumps: Vec<Jump>,
    /// Jumps above the cut that a truncated run left out.
    pub suppressed_jumps: usize,
}

impl PathObserver for Path {
    fn observe(&mut self, t: f64, x: &[f64], jacobians: Option<(&Matrix<f64>, &Matrix<f64>)>) {
        self.grid.push(t);
        self.x.push(x.to_vec());
        if let Some((f, i)) = jacobians {
            self.j_fwd.push(f.clone());
            self.j_inv.push(i.clone());
        }
    }
}

impl Path {
    fn empty() -> Self {
        Self { grid: vec![], x: vec![], j_fwd: vec![], j_inv: vec![], jumps: vec![], suppressed_jumps: 0 }
    }

    pub fn endpoint(&self) -> &[f64] {
        self.x.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// What a run did besides reporting the path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunInfo {
    pub jumps: Vec<Jump>,
    pub suppressed_jumps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Jumps above the cut applied, with their compensator.
    Full,
    /// Jumps above the cut left out, their compensator kept.
    Truncated,
}

/// Compensator data at one state.
#[derive(Debug)]
struct Compensator {
    drift: Vec<f64>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
    small_var: Vec<f64>,
}

/// A model bound to a simulation configuration.
pub struct Simulator<'a> {
    system: &'a FieldSystem,
    cfg: SimConfig,
    sampler: Option<JumpSampler>,
}

const SINGULAR_TOL: f64 = 1e-12;
const CACHE_QUANTUM: f64 = 1e-6;

impl<'a> Simulator<'a> {
    pub fn new(system: &'a FieldSystem, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let sampler = match (&system.measure, system.has_jumps()) {
            (Some(g), true) => {
                let mut s = JumpSampler::new(g, Region::Above(cfg.cut))?;
                s.max_events = cfg.max_events;
                Some(s)
            }
            _ => None,
        };
        Ok(Self { system, cfg: cfg.clone(), sampler })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn system(&self) -> &FieldSystem {
        self.system
    }

    /// Simulates one path and records it.
    pub fn path(&self, x0: &[f64], path_index: u64, mode: Mode) -> Result<Path> {
        let mut rng = PathRng::new(self.cfg.seed, path_index);
        let mut path = Path::empty();
        let info = self.run(x0, &mut rng, path_index, mode, &mut path)?;
        path.jumps = info.jumps;
        path.suppressed_jumps = info.suppressed_jumps;
        Ok(path)
    }

    /// Simulates one path, streaming grid points to `obs`.
    pub fn run<O: PathObserver + ?Sized>(
        &self,
        x0: &[f64],
        rng: &mut PathRng,
        path_index: u64,
        mode: Mode,
        obs: &mut O,
    ) -> Result<RunInfo> {
        let sys = self.system;
        let e = sys.state_dim();
        let d = sys.noise_dim();
        if x0.len() != e {
            return Err(Error::Dimension(format!("x0 has {} coordinates, state has {e}", x0.len())));
        }
        let record = self.cfg.record_jacobians;
        let jumps = match &self.sampler {
            Some(s) => s.sample(self.cfg.horizon, &mut rng.jumps)?,
            None => Vec::new(),
        };
        let (applied, suppressed) = match mode {
            Mode::Full => (jumps, 0),
            Mode::Truncated => (Vec::new(), jumps.len()),
        };
        let mut bridge = stream(self.cfg.seed, purpose::BRIDGE, path_index);

        let mut ws = Workspace::new(e, d);
        let mut x = x0.to_vec();
        let mut jf = Matrix::identity(e);
        let mut ji = Matrix::identity(e);
        let mut cache: HashMap<Vec<i64>, Rc<Compensator>> = HashMap::new();
        let mut dw = vec![0.0; d];
        let mut part = vec![0.0; d];
        obs.observe(0.0, &x, record.then_some((&jf, &ji)));

        let grid = self.cfg.base_grid();
        let mut next_jump = 0usize;
        for k in 0..grid.len() - 1 {
            let (t0, t1) = (grid[k], grid[k + 1]);
            for w in dw.iter_mut() {
                *w = rng.brownian.sample::<f64, _>(StandardNormal) * (t1 - t0).sqrt();
            }
            let mut t = t0;
            // jumps inside (t0, t1]: split the increment by a Brownian bridge
            while next_jump < applied.len() && applied[next_jump].time <= t1 {
                let jump = applied[next_jump];
                next_jump += 1;
                let remaining = t1 - t;
                let h = jump.time - t;
                if h > 0.0 {
                    let frac = h / remaining;
                    let sd = (h * (remaining - h) / remaining).max(0.0).sqrt();
                    for (p, w) in part.iter_mut().zip(dw.iter_mut()) {
                        *p = frac * *w + sd * bridge.sample::<f64, _>(StandardNormal);
                        *w -= *p;
                    }
                    self.euler(&mut ws, &mut cache, &mut rng.small_jumps, t, h, &part, &mut x, &mut jf, &mut ji)?;
                    t = jump.time;
                }
                self.apply_jump(&mut ws, jump, &mut x, &mut jf, &mut ji)?;
                obs.observe(t, &x, record.then_some((&jf, &ji)));
            }
            if t1 > t {
                self.euler(&mut ws, &mut cache, &mut rng.small_jumps, t, t1 - t, &dw, &mut x, &mut jf, &mut ji)?;
            }
            obs.observe(t1, &x, record.then_some((&jf, &ji)));
        }
        Ok(RunInfo { jumps: applied, suppressed_jumps: suppressed })
    }

    fn compensator(&self, x: &[f64], cache: &mut HashMap<Vec<i64>, Rc<Compensator>>) -> Result<Rc<Compensator>> {
        let key: Vec<i64> = x.iter().map(|v| (v / CACHE_QUANTUM).round() as i64).collect();
        if let Some(c) = cache.get(&key) {
            return Ok(c.clone());
        }
        let c = Rc::new(self.compute_compensator(x)?);
        cache.insert(key, c.clone());
        Ok(c)
    }

    fn compute_compensator(&self, x: &[f64]) -> Result<Compensator> {
        let sys = self.system;
        let e = sys.state_dim();
        let g = sys.measure.as_ref().expect("jump model without measure");
        let ee = e * e;
        let record = self.cfg.record_jacobians;
        let dim = if record { e + 3 * ee } else { e };
        let mut yv = vec![0.0; e];
        let mut dm = Matrix::zeros(e);
        let mut factor = Matrix::zeros(e);
        let opts = QuadOptions::default();
        let out = g.integrate(
            Region::Above(self.cfg.cut),
            dim,
            |m, o| {
                sys.jump.eval_into(x, &[m], 0.0, &mut yv)?;
                o[..e].copy_from_slice(&yv);
                if record {
                    sys.jump.jacobian_into(x, &[m], 0.0, &mut dm)?;
                    o[e..e + ee].copy_from_slice(dm.as_slice());
                    factor.as_mut_slice().copy_from_slice(dm.as_slice());
                    for i in 0..e {
                        factor[(i, i)] += 1.0;
                    }
                    // P = (I+D)^{-1} D and P D; a singular factor contributes
                    // nothing here and is reported when such a jump occurs
                    if let Some(p) = factor.solve_matrix(&dm, SINGULAR_TOL) {
                        o[e + ee..e + 2 * ee].copy_from_slice(p.as_slice());
                        o[e + 2 * ee..].copy_from_slice(p.matmul(&dm).as_slice());
                    } else {
                        o[e + ee..].iter_mut().for_each(|v| *v = 0.0);
                    }
                }
                Ok(())
            },
            &opts,
        )?;
        let v = out.value;
        let small_var = if self.cfg.gaussian_smalljump_correction {
            g.integrate(
                Region::Below(self.cfg.cut),
                e,
                |m, o| {
                    sys.jump.eval_into(x, &[m], 0.0, o)?;
                    o.iter_mut().for_each(|a| *a *= *a);
                    Ok(())
                },
                &opts,
            )?
            .value
        } else {
            vec![0.0; e]
        };
        let (m0, m1, m2) = if record {
            (v[e..e + ee].to_vec(), v[e + ee..e + 2 * ee].to_vec(), v[e + 2 * ee..].to_vec())
        } else {
            (vec![], vec![], vec![])
        };
        Ok(Compensator { drift: v[..e].to_vec(), m0, m1, m2, small_var })
    }

    #[allow(clippy::too_many_arguments)]
    fn euler(
        &self,
        ws: &mut Workspace,
        cache: &mut HashMap<Vec<i64>, Rc<Compensator>>,
        small_rng: &mut StreamRng,
        t: f64,
        h: f64,
        dw: &[f64],
        x: &mut [f64],
        jf: &mut Matrix<f64>,
        ji: &mut Matrix<f64>,
    ) -> Result<()> {
        let sys = self.system;
        let e = x.len();
        let record = self.cfg.record_jacobians;
        let comp = if self.sampler.is_some() { Some(self.compensator(x, cache)?) } else { None };

        sys.drift.eval_into(x, &[], t, &mut ws.z)?;
        for (k, v) in sys.diffusion.iter().enumerate() {
            v.eval_into(x, &[], t, &mut ws.v[k])?;
        }
        if record {
            sys.drift.jacobian_into(x, &[], t, &mut ws.dz)?;
            for (k, v) in sys.diffusion.iter().enumerate() {
                v.jacobian_into(x, &[], t, &mut ws.dv[k])?;
            }
            // forward: A = (DZ − M0) h + Σ DV_k dW_k,  J <- J + A J
            // inverse: B = (DZ − Σ DV_k² − M2 − M1) h + Σ DV_k dW_k,  Jinv <- Jinv − Jinv B
            let a = ws.a.as_mut_slice();
            let b = ws.b.as_mut_slice();
            for (i, (ai, bi)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
                let base = ws.dz.as_slice()[i] * h;
                *ai = base;
                *bi = base;
            }
            if let Some(c) = &comp {
                for i in 0..e * e {
                    a[i] -= c.m0[i] * h;
                    b[i] -= (c.m2[i] + c.m1[i]) * h;
                }
            }
            for (k, dv) in ws.dv.iter().enumerate() {
                let s = dv.as_slice();
                for r in 0..e {
                    for col in 0..e {
                        let mut sq = 0.0;
                        for m in 0..e {
                            sq += s[r * e + m] * s[m * e + col];
                        }
                        a[r * e + col] += s[r * e + col] * dw[k];
                        b[r * e + col] += s[r * e + col] * dw[k] - sq * h;
                    }
                }
            }
            mul_add_left(&ws.a, jf, &mut ws.tmp);
            mul_sub_right(ji, &ws.b, &mut ws.tmp);
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..e {
            let mut dx = ws.z[i] * h;
            if let Some(c) = &comp {
                dx -= c.drift[i] * h;
            }
            for (v, w) in ws.v.iter().zip(dw) {
                dx += v[i] * w;
            }
            if let Some(c) = &comp {
                if c.small_var[i] > 0.0 {
                    dx += (c.small_var[i] * h).sqrt() * small_rng.sample::<f64, _>(StandardNormal);
                }
            }
            x[i] += dx;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("state became non-finite at t = {}", t + h)));
        }
        Ok(())
    }

    fn apply_jump(&self, ws: &mut Workspace, jump: Jump, x: &mut [f64], jf: &mut Matrix<f64>, ji: &mut Matrix<f64>) -> Result<()> {
        let sys = self.system;
        let e = x.len();
        let y = [jump.mark];
        sys.jump.eval_into(x, &y, jump.time, &mut ws.z)?;
        if self.cfg.record_jacobians {
            sys.jump.jacobian_into(x, &y, jump.time, &mut ws.a)?;
            ws.b.as_mut_slice().copy_from_slice(ws.a.as_slice());
            for i in 0..e {
                ws.b[(i, i)] += 1.0;
            }
            let p = ws
                .b
                .solve_matrix(&ws.a, SINGULAR_TOL)
                .ok_or(Error::SingularJumpFactor { time: jump.time, mark: jump.mark })?;
            // J <- J + D J,  Jinv <- Jinv − Jinv P
            mul_add_left(&ws.a, jf, &mut ws.tmp);
            mul_sub_right(ji, &p, &mut ws.tmp);
        }
        for (xi, zi) in x.iter_mut().zip(&ws.z) {
            *xi += zi;
        }
        Ok(())
    }
}

struct Workspace {
    z: Vec<f64>,
    v: Vec<Vec<f64>>,
    dz: Matrix<f64>,
    dv: Vec<Matrix<f64>>,
    a: Matrix<f64>,
    b: Matrix<f64>,
    tmp: Matrix<f64>,
}

impl Workspace {
    fn new(e: usize, d: usize) -> Self {
        Self {
            z: vec![0.0; e],
            v: vec![vec![0.0; e]; d],
            dz: Matrix::zeros(e),
            dv: vec![Matrix::zeros(e); d],
            a: Matrix::zeros(e),
            b: Matrix::zeros(e),
            tmp: Matrix::zeros(e),
        }
    }
}

/// `m <- m + a m`
fn mul_add_left(a: &Matrix<f64>, m: &mut Matrix<f64>, tmp: &mut Matrix<f64>) {
    let e = m.dim();
    let (a, ms) = (a.as_slice(), m.as_slice());
    let t = tmp.as_mut_slice();
    for i in 0..e {
        for j in 0..e {
            let mut s = ms[i * e + j];
            for k in 0..e {
                s += a[i * e + k] * ms[k * e + j];
            }
            t[i * e + j] = s;
        }
    }
    m.as_mut_slice().copy_from_slice(tmp.as_slice());
}

/// `m <- m − m b`
fn mul_sub_right(m: &mut Matrix<f64>, b: &Matrix<f64>, tmp: &mut Matrix<f64>) {
    let e = m.dim();
    let (b, ms) = (b.as_slice(), m.as_slice());
    let t = tmp.as_mut_slice();
    for i in 0..e {
        for j in 0..e {
            let mut s = ms[i * e + j];
            for k in 0..e {
                s -= ms[i * e + k] * b[k * e + j];
            }
            t[i * e + j] = s;
        }
    }
    m.as_mut_slice().copy_from_slice(tmp.as_slice());
}

/// Simulates `(x, J, Jinv)` with jumps above the cut.
pub fn simulate_path(system: &FieldSystem, x0: &[f64], cfg: &SimConfig, path_index: u64) -> Result<Path> {
    Simulator::new(system, cfg)?.path(x0, path_index, Mode::Full)
}

/// Simulates the process with jumps above the cut removed and their
/// compensator drift kept.
pub fn simulate_truncated_path(system: &FieldSystem, x0: &[f64], cfg: &SimConfig, path_index: u64) -> Result<Path> {
    Simulator::new(system, cfg)?.path(x0, path_index, Mode::Truncated)
}

/// `x_T` of `n_paths` paths, in path order. Jacobians are not propagated.
pub fn simulate_endpoints(system: &FieldSystem, x0: &[f64], cfg: &SimConfig, n_paths: usize) -> Result<Vec<Vec<f64>>> {
    let mut cfg = cfg.clone();
    cfg.record_jacobians = false;
    let sim = Simulator::new(system, &cfg)?;
    crate::stats::try_par_map(n_paths, |i| {
        let mut rng = PathRng::new(cfg.seed, i);
        let mut last = Vec::new();
        let mut keep = |_t: f64, x: &[f64], _j: Option<(&Matrix<f64>, &Matrix<f64>)>| {
            last.clear();
            last.extend_from_slice(x);
        };
        sim.run(x0, &mut rng, i, Mode::Full, &mut keep)?;
        Ok(last)
    })
}

/// `max_t max_ij |(Jinv J − I)_ij|` over the recorded grid.
pub fn jacobian_inverse_residual(path: &Path) -> Result<f64> {
    if path.j_fwd.is_empty() || path.j_fwd.len() != path.grid.len() {
        return Err(Error::invalid("path was simulated without Jacobians"));
    }
    Ok(path
        .j_inv
        .iter()
        .zip(&path.j_fwd)
        .map(|(i, f)| i.matmul(f).distance_from_identity())
        .fold(0.0, f64::max))
}

/// Streaming version of [`jacobian_inverse_residual`].
#[derive(Clone, Debug, Default)]
pub struct ResidualTracker {
    pub max: f64,
}

impl PathObserver for ResidualTracker {
    fn observe(&mut self, _t: f64, _x: &[f64], jacobians: Option<(&Matrix<f64>, &Matrix<f64>)>) {
        if let Some((f, i)) = jacobians {
            self.max = self.max.max(i.matmul(f).distance_from_identity());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::LevyMeasure;
    use crate::models;

    fn cfg(dt: f64) -> SimConfig {
        SimConfig { dt, seed: 5, ..SimConfig::default() }
    }

    #[test]
    fn base_grid() {
        let g = SimConfig { horizon: 1.0, dt: 0.3, ..SimConfig::default() }.base_grid();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = cfg(1e-3).base_grid();
        assert_eq!(g.len(), 1001);
        assert!(SimConfig { dt: 2.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { cut: 0.0, ..SimConfig::default() }.validate().is_err());
    }

    #[test]
    fn null_dynamics() {
        let m = models::null(2).unwrap();
        let p = simulate_path(&m, &[1.0, -2.0], &cfg(0.01), 0).unwrap();
        assert_eq!(p.grid.len(), 101);
        assert!(p.x.iter().all(|x| x == &[1.0, -2.0]));
        assert!(p.j_fwd.iter().chain(&p.j_inv).all(|j| *j == Matrix::identity(2)));
        assert_eq!(jacobian_inverse_residual(&p).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_linear_drift() {
        let m = models::linear_additive(-1.0, 0.0).unwrap();
        let a = -1.0_f64;
        let mut last = f64::INFINITY;
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let p = simulate_path(&m, &[1.0], &cfg(dt), 0).unwrap();
            let jf = p.j_fwd.last().unwrap()[(0, 0)];
            let ji = p.j_inv.last().unwrap()[(0, 0)];
            assert!((jf - a.exp()).abs() < 2.0 * dt);
            assert!((ji - (-a).exp()).abs() < 4.0 * dt);
            let r = jacobian_inverse_residual(&p).unwrap();
            assert!(r < 2.0 * dt && r < last);
            last = r;
        }
    }

    #[test]
    fn pure_jump_path_is_a_sum_of_marks() {
        let g = LevyMeasure::power_law(1.5).unwrap();
        let m = models::pure_jump(g).unwrap();
        let c = SimConfig { cut: 0.1, dt: 0.01, ..cfg(0.01) };
        let p = simulate_path(&m, &[0.0], &c, 3).unwrap();
        assert!(!p.jumps.is_empty());
        let sum: f64 = p.jumps.iter().map(|j| j.mark).sum();
        assert!((p.endpoint()[0] - sum).abs() < 1e-12);
        assert!(p.jumps.iter().all(|j| j.mark.abs() > 0.1));
        assert_eq!(p.grid.len(), 101 + p.jumps.len());
        assert!(p.grid.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(jacobian_inverse_residual(&p).unwrap(), 0.0);
    }

    #[test]
    fn truncated_matches_full_without_big_jumps() {
        let m = models::linear_additive(-1.0, 1.0).unwrap();
        let a = simulate_path(&m, &[0.5], &cfg(0.01), 9).unwrap();
        let b = simulate_truncated_path(&m, &[0.5], &cfg(0.01), 9).unwrap();
        assert_eq!(a, b);
        // a jump model whose realisation happens to have no big jumps
        let g = LevyMeasure::power_law(1.5).unwrap();
        let jm = models::paper_example(1.5, &models::DEFAULT_JUMP_PROFILE).unwrap();
        let c = SimConfig { cut: 0.999, dt: 0.01, horizon: 0.2, ..cfg(0.01) };
        let rate = JumpSampler::new(&g, Region::Above(0.999)).unwrap().rate();
        assert!(rate * 0.2 < 1e-2);
        for idx in 0..20 {
            let full = simulate_path(&jm, &[0.1, 0.2], &c, idx).unwrap();
            if full.jumps.is_empty() {
                let trunc = simulate_truncated_path(&jm, &[0.1, 0.2], &c, idx).unwrap();
                assert_eq!(full.grid, trunc.grid);
                assert_eq!(full.x, trunc.x);
                return;
            }
        }
        panic!("every path had a big jump");
    }

    #[test]
    fn jumps_keep_the_inverse_consistent() {
        let m = models::paper_example(1.5, &models::DEFAULT_JUMP_PROFILE).unwrap();
        let c = SimConfig { cut: 0.05, dt: 1e-3, ..cfg(1e-3) };
        let p = simulate_path(&m, &[0.3, -0.2], &c, 1).unwrap();
        assert!(!p.jumps.is_empty());
        assert!(jacobian_inverse_residual(&p).unwrap() < 1e-2);
    }

    #[test]
    fn reproducible() {
        let m = models::heisenberg().unwrap();
        let a = simulate_path(&m, &[0.0, 0.0], &cfg(0.01), 4).unwrap();
        let b = simulate_path(&m, &[0.0, 0.0], &cfg(0.01), 4).unwrap();
        let c = simulate_path(&m, &[0.0, 0.0], &cfg(0.01), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, c.x);
    }
}
