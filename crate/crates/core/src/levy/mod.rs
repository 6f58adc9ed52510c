//! Jump measures `G(dy)` on one-dimensional marks, their integrals, jump
//! sampling above a truncation level, and numerical checks of the
//! regularity conditions the smoothness results require.
//!
//! Marks are scalar (`n = 1`). A measure lives on `lo < |y| <= hi`
//! (`lo = 0` allowed), either on the positive half-line only or mirrored
//! symmetrically onto negative marks.

mod conditions;
mod sampling;

pub use conditions::{check_conditions, check_conditions_with, eps_grid, ConditionOptions, ConditionReport, ConditionVerdicts};
pub use sampling::{sample_jumps, Jump, JumpSampler, DEFAULT_MAX_EVENTS};

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_expr, EvalError, Expr, Tape, VectorField};
use crate::error::{Error, Result};
use crate::quad::{integrate_geometric, integrate_to_zero, QuadOptions, QuadOutput};

/// Built-in measure families.
#[derive(Clone, Debug)]
enum Density {
    /// `|y|^{-kappa}`
    PowerLaw { kappa: f64 },
    /// constant height
    Uniform { height: f64 },
    /// user expression in `y1`, evaluated at `|y|`
    Custom(Tape),
}

#[derive(Clone, Debug)]
pub struct LevyMeasure {
    name: String,
    kappa: f64,
    lo: f64,
    hi: f64,
    symmetric: bool,
    density: Density,
    density_expr: Expr,
}

/// A set of marks, described by `|y|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    All,
    /// `|y| > cut`
    Above(f64),
    /// `|y| < cut`
    Below(f64),
    /// `lo < |y| < hi`
    Band { lo: f64, hi: f64 },
}

impl Region {
    fn bounds(self) -> (f64, f64) {
        match self {
            Region::All => (0.0, f64::INFINITY),
            Region::Above(c) => (c, f64::INFINITY),
            Region::Below(c) => (0.0, c),
            Region::Band { lo, hi } => (lo, hi),
        }
    }
}

impl LevyMeasure {
    /// `G(dy) = |y|^{-kappa} dy` on `0 < |y| <= 1`, symmetric.
    pub fn power_law(kappa: f64) -> Result<Self> {
        Self::power_law_on(kappa, 0.0, 1.0, true)
    }

    pub fn power_law_on(kappa: f64, lo: f64, hi: f64, symmetric: bool) -> Result<Self> {
        check_support(lo, hi)?;
        if !kappa.is_finite() {
            return Err(Error::invalid("kappa must be finite"));
        }
        let density_expr = Expr::pow(Expr::y(0), Expr::Const(-kappa));
        Ok(Self {
            name: "power_law".into(),
            kappa,
            lo,
            hi,
            symmetric,
            density: Density::PowerLaw { kappa },
            density_expr,
        })
    }

    /// Finite-activity measure with total mass `rate`, uniform marks on
    /// `[-hi, hi]`. Its order parameter is `kappa = n = 1`.
    pub fn finite_activity_uniform(rate: f64, hi: f64) -> Result<Self> {
        check_support(0.0, hi)?;
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::invalid("rate must be non-negative"));
        }
        let height = rate / (2.0 * hi);
        Ok(Self {
            name: "finite_activity_uniform".into(),
            kappa: 1.0,
            lo: 0.0,
            hi,
            symmetric: true,
            density: Density::Uniform { height },
            density_expr: Expr::Const(height),
        })
    }

    /// Measure with density given as an expression in `y1` (evaluated at
    /// `|y|`), checked non-negative on a grid over the support.
    pub fn custom(density: &str, lo: f64, hi: f64, symmetric: bool, kappa: f64) -> Result<Self> {
        check_support(lo, hi)?;
        let expr = parse_expr(density, 0, 1)?;
        let tape = Tape::compile(&expr);
        for k in 1..=200 {
            let r = lo + (hi - lo) * k as f64 / 200.0;
            let g = tape.eval(&[], &[r], 0.0)?;
            if g < 0.0 {
                return Err(Error::invalid(format!("density is negative at |y| = {r}")));
            }
        }
        Ok(Self {
            name: "custom".into(),
            kappa,
            lo,
            hi,
            symmetric,
            density: Density::Custom(tape),
            density_expr: expr,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Mark dimension; always one here.
    pub fn mark_dim(&self) -> usize {
        1
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn density_expr(&self) -> &Expr {
        &self.density_expr
    }

    /// Density at `|y| = r > 0`, zero off the support.
    pub fn density(&self, r: f64) -> std::result::Result<f64, EvalError> {
        if r <= self.lo || r > self.hi {
            return Ok(0.0);
        }
        Ok(match &self.density {
            Density::PowerLaw { kappa } => r.powf(-kappa),
            Density::Uniform { height } => *height,
            Density::Custom(t) => t.eval(&[], &[r], 0.0)?,
        })
    }

    /// Magnitude interval `[a, b]` of a region intersected with the
    /// support; `None` when empty.
    pub(crate) fn magnitude_range(&self, region: Region) -> Option<(f64, f64)> {
        let (a, b) = region.bounds();
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        (a < b).then_some((a, b))
    }

    /// `∫_region f(y) G(dy)` for a vector integrand.
    ///
    /// Symmetric measures integrate `f(y) + f(-y)` over positive marks, so
    /// odd integrands cancel pointwise. Near a singular origin the range is
    /// split at `min(1, b)` and subdivided geometrically toward zero.
    pub fn integrate<F>(&self, region: Region, dim: usize, mut f: F, opts: &QuadOptions) -> Result<QuadOutput>
    where
        F: FnMut(f64, &mut [f64]) -> std::result::Result<(), EvalError>,
    {
        let Some((a, b)) = self.magnitude_range(region) else {
            return Ok(QuadOutput::zeros(dim));
        };
        let mut scratch = vec![0.0; dim];
        let symmetric = self.symmetric;
        let mut integrand = |r: f64, out: &mut [f64]| -> Result<()> {
            let g = self.density(r)?;
            f(r, out)?;
            if symmetric {
                f(-r, &mut scratch)?;
                for (o, s) in out.iter_mut().zip(&scratch) {
                    *o += s;
                }
            }
            for o in out.iter_mut() {
                *o *= g;
            }
            Ok(())
        };
        if a > 0.0 {
            return integrate_geometric(&mut integrand, a, b, dim, opts);
        }
        let split = b.min(1.0);
        let mut inner = integrate_to_zero(&mut integrand, split, dim, opts)?;
        let outer = integrate_geometric(&mut integrand, split, b, dim, opts)?;
        for (v, o) in inner.value.iter_mut().zip(&outer.value) {
            *v += o;
        }
        inner.error += outer.error;
        Ok(inner)
    }

    /// `∫_region f(y) G(dy)` for a scalar integrand.
    pub fn integrate_scalar<F>(&self, region: Region, mut f: F, opts: &QuadOptions) -> Result<f64>
    where
        F: FnMut(f64) -> f64,
    {
        let out = self.integrate(
            region,
            1,
            |y, o| {
                o[0] = f(y);
                Ok(())
            },
            opts,
        )?;
        Ok(out.value[0])
    }

    /// `G(region)`.
    pub fn mass(&self, region: Region) -> Result<f64> {
        self.integrate_scalar(region, |_| 1.0, &QuadOptions::default())
    }

    /// `∫_{|y| > cut} G(dy)` to relative tolerance 1e-8.
    pub fn tail_mass(&self, cut: f64) -> Result<f64> {
        if !(cut > 0.0) {
            return Err(Error::invalid(format!("tail_mass cut must be positive, got {cut}")));
        }
        self.mass(Region::Above(cut))
    }

    /// Closed-form tail mass, when the family has one.
    pub fn tail_mass_closed_form(&self, cut: f64) -> Option<f64> {
        let (a, b) = self.magnitude_range(Region::Above(cut))?;
        let sides = if self.symmetric { 2.0 } else { 1.0 };
        match self.density {
            Density::PowerLaw { kappa } => Some(sides * power_law_mass(kappa, a, b)),
            Density::Uniform { height } => Some(sides * height * (b - a)),
            Density::Custom(_) => None,
        }
    }
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(format!("support must satisfy 0 <= lo < hi < inf, got ({lo}, {hi})")));
    }
    Ok(())
}

/// `∫_a^b r^{-kappa} dr`
pub(crate) fn power_law_mass(kappa: f64, a: f64, b: f64) -> f64 {
    if (kappa - 1.0).abs() < 1e-12 {
        (b / a).ln()
    } else {
        (a.powf(1.0 - kappa) - b.powf(1.0 - kappa)) / (kappa - 1.0)
    }
}

/// Growth function used by the rate condition:
/// `log(1/x)` when `kappa = n`, `x^{-(kappa - n)}` when `kappa > n`.
pub fn f_of(kappa: f64, n: usize, x: f64) -> Result<f64> {
    let n = n as f64;
    if kappa < n {
        return Err(Error::invalid(format!("kappa = {kappa} must be >= n = {n}")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::invalid(format!("x = {x} must lie in (0, 1)")));
    }
    Ok(if kappa == n { (1.0 / x).ln() } else { x.powf(-(kappa - n)) })
}

/// `∫_region Y(x, y) G(dy)` componentwise, relative tolerance 1e-8.
pub fn compensator_integral(y_field: &VectorField, g: &LevyMeasure, region: Region, x: &[f64]) -> Result<Vec<f64>> {
    let e = y_field.dim();
    if y_field.is_zero() {
        return Ok(vec![0.0; e]);
    }
    let out = g.integrate(
        region,
        e,
        |y, o| y_field.eval_into(x, &[y], 0.0, o),
        &QuadOptions::default(),
    )?;
    Ok(out.value)
}
