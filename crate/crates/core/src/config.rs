//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "model": { "name": "linear_additive", "a": -1.0, "sigma": 1.0 },
//!   "measure": null,
//!   "sim": { "dt": 0.001 },
//!   "experiment": { "kind": "density", "n_paths": 100000 },
//!   "output_dir": "out",
//!   "seed": 7
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::GridSpec;
use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::fields::{FieldSystem, DEFAULT_JMAX, MAX_JMAX};
use crate::inequalities::NorrisInstance;
use crate::levy::LevyMeasure;
use crate::models;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearAdditive {
        a: f64,
        sigma: f64,
    },
    LinearMultiplicative {
        a: f64,
        sigma: f64,
    },
    Heisenberg,
    HeisenbergGroup,
    /// Uses its own power-law measure with exponent `kappa`.
    PaperExample {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profile: Option<Vec<String>>,
    },
    PureJump,
    Null {
        dim: usize,
    },
    OrthonormalFrame {
        dim: usize,
    },
    Degenerate,
    Custom {
        drift: Vec<String>,
        #[serde(default)]
        diffusion: Vec<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        jump: Option<Vec<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    PowerLaw {
        kappa: f64,
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
        #[serde(default = "yes")]
        symmetric: bool,
    },
    FiniteActivityUniform {
        rate: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    Custom {
        density: String,
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
        #[serde(default = "yes")]
        symmetric: bool,
        kappa: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl MeasureSpec {
    pub fn build(&self) -> Result<LevyMeasure> {
        match self {
            MeasureSpec::PowerLaw { kappa, lo, hi, symmetric } => LevyMeasure::power_law_on(*kappa, *lo, *hi, *symmetric),
            MeasureSpec::FiniteActivityUniform { rate, hi } => LevyMeasure::finite_activity_uniform(*rate, *hi),
            MeasureSpec::Custom { density, lo, hi, symmetric, kappa } => LevyMeasure::custom(density, *lo, *hi, *symmetric, *kappa),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmiCell {
    pub jump_bound: f64,
    pub delta: f64,
    pub rho: f64,
}

/// Norris-type coefficients as DSL strings in `t`, `x1 = a`, `x2 = Y` and,
/// for the jump integrands, `y1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NorrisSpec {
    #[serde(default = "zero_str")]
    pub drift_a: String,
    pub noise_a: Vec<String>,
    pub noise_y: Vec<String>,
    #[serde(default = "zero_str")]
    pub jump_a: String,
    #[serde(default = "zero_str")]
    pub jump_y: String,
    #[serde(default)]
    pub a0_init: f64,
    #[serde(default)]
    pub y0_init: f64,
    pub alpha_holder: f64,
    pub delta: f64,
    pub q: f64,
    pub r: f64,
    pub v: f64,
    pub w: f64,
    pub l: f64,
    #[serde(default = "one")]
    pub t0: f64,
}

fn zero_str() -> String {
    "0".into()
}

impl NorrisSpec {
    pub fn build(&self, measure: Option<Arc<LevyMeasure>>, sim: &SimConfig) -> Result<NorrisInstance> {
        let parse = |s: &str, mark: bool, at: &str| {
            NorrisInstance::parse_coefficient(s, mark).map_err(|e| Error::config(format!("/experiment/instance/{at}"), e.to_string()))
        };
        let list = |v: &[String], at: &str| -> Result<Vec<_>> {
            v.iter().enumerate().map(|(i, s)| parse(s, false, &format!("{at}/{i}"))).collect()
        };
        let mut inst = NorrisInstance::zero(self.noise_a.len());
        inst.drift_a = parse(&self.drift_a, false, "drift_a")?;
        inst.noise_a = list(&self.noise_a, "noise_a")?;
        inst.noise_y = list(&self.noise_y, "noise_y")?;
        inst.jump_a = parse(&self.jump_a, true, "jump_a")?;
        inst.jump_y = parse(&self.jump_y, true, "jump_y")?;
        inst.measure = measure;
        inst.a0_init = self.a0_init;
        inst.y0_init = self.y0_init;
        inst.alpha_holder = self.alpha_holder;
        inst.delta = self.delta;
        (inst.q, inst.r, inst.v, inst.w, inst.l, inst.t0) = (self.q, self.r, self.v, self.w, self.l, self.t0);
        inst.dt = sim.dt.min(self.t0);
        inst.cut = sim.cut;
        inst.max_events = sim.max_events;
        inst.validate().map_err(|e| Error::config("/experiment/instance", e.to_string()))?;
        Ok(inst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    /// Writes every grid point of every path.
    Simulate {
        n_paths: usize,
        #[serde(default)]
        truncated: bool,
    },
    UhCheck {
        #[serde(default = "default_jmax")]
        jmax: usize,
        sample_box: Vec<(f64, f64)>,
        #[serde(default = "default_points")]
        n_points: usize,
        #[serde(default = "default_dirs")]
        n_dirs: usize,
        #[serde(default = "default_c_min")]
        c_min: f64,
    },
    CovTail {
        n_paths: usize,
        eps_grid: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
    },
    InverseMoment {
        n_paths: usize,
        p: f64,
        floor: f64,
    },
    Emi {
        /// `f(t, y)`; multiplied by each cell's jump bound when `scale_with_bound`.
        integrand: String,
        #[serde(default)]
        scale_with_bound: bool,
        cells: Vec<EmiCell>,
        n_paths: usize,
    },
    Norris {
        instance: NorrisSpec,
        eps_grid: Vec<f64>,
        n_paths: usize,
    },
    Density {
        n_paths: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridSpec>,
        #[serde(default = "default_density_points")]
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<Vec<f64>>,
    },
    VerifyMeasure {
        alpha: f64,
        sample_box: Vec<(f64, f64)>,
        #[serde(default = "default_cond_points")]
        n_points: usize,
    },
    IntervalCdf {
        m: usize,
        #[serde(default = "one")]
        t0: f64,
        #[serde(default = "default_cdf_points")]
        points: usize,
        replications: usize,
    },
}

fn default_jmax() -> usize {
    DEFAULT_JMAX
}
fn default_points() -> usize {
    64
}
fn default_dirs() -> usize {
    16
}
fn default_c_min() -> f64 {
    1e-8
}
fn default_density_points() -> usize {
    401
}
fn default_cond_points() -> usize {
    24
}
fn default_cdf_points() -> usize {
    20
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Simulate { .. } => "simulate",
            ExperimentSpec::UhCheck { .. } => "uh-check",
            ExperimentSpec::CovTail { .. } => "cov-tail",
            ExperimentSpec::InverseMoment { .. } => "inverse-moment",
            ExperimentSpec::Emi { .. } => "emi",
            ExperimentSpec::Norris { .. } => "norris",
            ExperimentSpec::Density { .. } => "density",
            ExperimentSpec::VerifyMeasure { .. } => "verify-measure",
            ExperimentSpec::IntervalCdf { .. } => "interval-cdf",
        }
    }

    /// Path count, for experiments that simulate paths.
    pub fn n_paths_mut(&mut self) -> Option<&mut usize> {
        match self {
            ExperimentSpec::Simulate { n_paths, .. }
            | ExperimentSpec::CovTail { n_paths, .. }
            | ExperimentSpec::InverseMoment { n_paths, .. }
            | ExperimentSpec::Emi { n_paths, .. }
            | ExperimentSpec::Norris { n_paths, .. }
            | ExperimentSpec::Density { n_paths, .. } => Some(n_paths),
            ExperimentSpec::IntervalCdf { replications, .. } => Some(replications),
            ExperimentSpec::UhCheck { .. } | ExperimentSpec::VerifyMeasure { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// Initial state; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub sim: SimConfig,
    pub experiment: ExperimentSpec,
    pub output_dir: PathBuf,
    /// Master seed; replaces `sim.seed` when the config is resolved.
    pub seed: u64,
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("", e.to_string()))
    }

    /// Reads and parses a config file. Errors name the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read config: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Copies the master seed into the simulation settings.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.sim.seed = self.seed;
        out
    }

    pub fn build_measure(&self) -> Result<Option<Arc<LevyMeasure>>> {
        match &self.measure {
            Some(m) => Ok(Some(Arc::new(m.build().map_err(at("/measure"))?))),
            None => Ok(None),
        }
    }

    pub fn build_system(&self) -> Result<FieldSystem> {
        let measure = self.build_measure()?;
        let needs_measure = |name: &str| Error::config("/measure", format!("model {name} needs a jump measure"));
        let system = match &self.model {
            ModelSpec::LinearAdditive { a, sigma } => models::linear_additive(*a, *sigma),
            ModelSpec::LinearMultiplicative { a, sigma } => models::linear_multiplicative(*a, *sigma),
            ModelSpec::Heisenberg => models::heisenberg(),
            ModelSpec::HeisenbergGroup => models::heisenberg_group(),
            ModelSpec::PaperExample { kappa, profile } => {
                if measure.is_some() {
                    return Err(Error::config("/measure", "paper_example sets its own power-law measure"));
                }
                let profile: Vec<&str> = match profile {
                    Some(p) => p.iter().map(String::as_str).collect(),
                    None => models::DEFAULT_JUMP_PROFILE.to_vec(),
                };
                models::paper_example(*kappa, &profile)
            }
            ModelSpec::PureJump => {
                let g = measure.ok_or_else(|| needs_measure("pure_jump"))?;
                models::pure_jump((*g).clone())
            }
            ModelSpec::Null { dim } => models::null(*dim),
            ModelSpec::OrthonormalFrame { dim } => models::orthonormal_frame(*dim),
            ModelSpec::Degenerate => models::degenerate(),
            ModelSpec::Custom { drift, diffusion, jump } => {
                if jump.is_some() && measure.is_none() {
                    return Err(needs_measure("custom"));
                }
                models::custom(drift, diffusion, jump.as_deref(), measure.map(|g| (*g).clone()))
            }
        };
        system.map_err(at("/model"))
    }

    pub fn initial_state(&self, system: &FieldSystem) -> Result<Vec<f64>> {
        let e = system.state_dim();
        match &self.x0 {
            Some(x) if x.len() != e => Err(Error::config("/x0", format!("expected {e} coordinates, got {}", x.len()))),
            Some(x) => Ok(x.clone()),
            None => Ok(vec![0.0; e]),
        }
    }

    /// Structural checks that need no simulation.
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let system = self.build_system()?;
        self.initial_state(&system)?;
        let positive = |n: usize, path: &str| {
            if n == 0 {
                Err(Error::config(path, "must be positive"))
            } else {
                Ok(())
            }
        };
        let eps_ok = |g: &[f64], path: &str| {
            if g.is_empty() || g.iter().any(|&e| !(e > 0.0)) || g.windows(2).any(|w| w[1] >= w[0]) {
                Err(Error::config(path, "must be non-empty, positive and strictly decreasing"))
            } else {
                Ok(())
            }
        };
        let box_ok = |b: &[(f64, f64)], path: &str| {
            if b.len() != system.state_dim() || b.iter().any(|(lo, hi)| !(hi >= lo)) {
                Err(Error::config(path, format!("needs {} intervals with lo <= hi", system.state_dim())))
            } else {
                Ok(())
            }
        };
        match &self.experiment {
            ExperimentSpec::Simulate { n_paths, .. } => positive(*n_paths, "/experiment/n_paths"),
            ExperimentSpec::UhCheck { jmax, sample_box, n_points, n_dirs, c_min } => {
                if *jmax > MAX_JMAX {
                    return Err(Error::config("/experiment/jmax", format!("must be at most {MAX_JMAX}")));
                }
                if !(*c_min > 0.0) {
                    return Err(Error::config("/experiment/c_min", "must be positive"));
                }
                positive(*n_points, "/experiment/n_points")?;
                positive(*n_dirs, "/experiment/n_dirs")?;
                box_ok(sample_box, "/experiment/sample_box")
            }
            ExperimentSpec::CovTail { n_paths, eps_grid, direction } => {
                if *n_paths < 100 {
                    return Err(Error::config("/experiment/n_paths", "must be at least 100"));
                }
                if let Some(u) = direction {
                    if u.len() != system.state_dim() || !u.iter().any(|&c| c != 0.0) {
                        return Err(Error::config("/experiment/direction", "must be a non-zero state vector"));
                    }
                }
                eps_ok(eps_grid, "/experiment/eps_grid")
            }
            ExperimentSpec::InverseMoment { n_paths, p, floor } => {
                positive(*n_paths, "/experiment/n_paths")?;
                if !(*p >= 2.0) {
                    return Err(Error::config("/experiment/p", "must be at least 2"));
                }
                if !(*floor > 0.0) {
                    return Err(Error::config("/experiment/floor", "must be positive"));
                }
                Ok(())
            }
            ExperimentSpec::Emi { integrand, cells, n_paths, .. } => {
                positive(*n_paths, "/experiment/n_paths")?;
                if self.measure.is_none() {
                    return Err(Error::config("/measure", "emi needs a jump measure"));
                }
                crate::dsl::parse_expr(integrand, 0, 1).map_err(|e| Error::config("/experiment/integrand", e.to_string()))?;
                if cells.is_empty() {
                    return Err(Error::config("/experiment/cells", "must not be empty"));
                }
                for (i, c) in cells.iter().enumerate() {
                    if !(c.jump_bound > 0.0 && c.delta > 0.0 && c.rho > 0.0) {
                        return Err(Error::config(format!("/experiment/cells/{i}"), "jump_bound, delta and rho must be positive"));
                    }
                }
                Ok(())
            }
            ExperimentSpec::Norris { instance, eps_grid, n_paths } => {
                positive(*n_paths, "/experiment/n_paths")?;
                if eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    return Err(Error::config("/experiment/eps_grid", "values must lie in (0, 1)"));
                }
                eps_ok(eps_grid, "/experiment/eps_grid")?;
                instance.build(self.build_measure()?, &self.sim).map(|_| ())
            }
            ExperimentSpec::Density { n_paths, grid, points, bandwidth } => {
                if *n_paths < 100 {
                    return Err(Error::config("/experiment/n_paths", "must be at least 100"));
                }
                if system.state_dim() > 3 {
                    return Err(Error::config("/model", "density estimation supports up to 3 dimensions"));
                }
                if *points < 5 {
                    return Err(Error::config("/experiment/points", "must be at least 5"));
                }
                if let Some(g) = grid {
                    if g.dim() != system.state_dim() {
                        return Err(Error::config("/experiment/grid", "needs one axis per state coordinate"));
                    }
                }
                if let Some(b) = bandwidth {
                    if b.len() != system.state_dim() || b.iter().any(|&h| !(h > 0.0)) {
                        return Err(Error::config("/experiment/bandwidth", "needs one positive value per dimension"));
                    }
                }
                Ok(())
            }
            ExperimentSpec::VerifyMeasure { alpha, sample_box, n_points } => {
                if self.measure.is_none() && !matches!(self.model, ModelSpec::PaperExample { .. }) {
                    return Err(Error::config("/measure", "verify-measure needs a jump measure"));
                }
                if !(*alpha > 0.0) {
                    return Err(Error::config("/experiment/alpha", "must be positive"));
                }
                positive(*n_points, "/experiment/n_points")?;
                box_ok(sample_box, "/experiment/sample_box")
            }
            ExperimentSpec::IntervalCdf { m, t0, points, replications } => {
                positive(*m, "/experiment/m")?;
                positive(*points, "/experiment/points")?;
                positive(*replications, "/experiment/replications")?;
                if !(*t0 > 0.0) {
                    return Err(Error::config("/experiment/t0", "must be positive"));
                }
                Ok(())
            }
        }
    }
}
