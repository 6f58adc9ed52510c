//! Model description and Lie-bracket machinery.
//!
//! A [`FieldSystem`] holds the drift `Z`, the diffusion fields `V_1..V_d`,
//! the jump field `Y(x, y)` and the jump measure. Brackets are built
//! symbolically, so fields at any depth of the bracket hierarchy are exact.

mod hierarchy;

pub use hierarchy::{
    bracket_hierarchy, uh_check, uh_check_with, BracketHierarchy, HierarchyField, UhOptions, UhReport,
    DEFAULT_JMAX, MAX_JMAX,
};

use std::sync::Arc;

use serde::Serialize;

use crate::dsl::{Expr, Var, VectorField};
use crate::error::{Error, Result};
use crate::levy::{compensator_integral, LevyMeasure, Region};

/// `dx = Z dt + V dW + ∫ Y(x_-, y) (mu - nu)(dy, dt)`.
#[derive(Clone, Debug)]
pub struct FieldSystem {
    pub name: String,
    pub drift: VectorField,
    pub diffusion: Vec<VectorField>,
    pub jump: VectorField,
    pub measure: Option<Arc<LevyMeasure>>,
}

impl FieldSystem {
    pub fn new(
        name: impl Into<String>,
        drift: VectorField,
        diffusion: Vec<VectorField>,
        jump: VectorField,
        measure: Option<Arc<LevyMeasure>>,
    ) -> Result<Self> {
        let e = drift.dim();
        if e == 0 {
            return Err(Error::Dimension("state dimension must be at least 1".into()));
        }
        for (i, v) in diffusion.iter().enumerate() {
            if v.dim() != e {
                return Err(Error::Dimension(format!("V{} has {} components, expected {e}", i + 1, v.dim())));
            }
        }
        if jump.dim() != e {
            return Err(Error::Dimension(format!("Y has {} components, expected {e}", jump.dim())));
        }
        let fields = std::iter::once(&drift).chain(&diffusion).chain(std::iter::once(&jump));
        for f in fields {
            for c in f.components() {
                let (xs, ys) = c.dims_used();
                if xs > e {
                    return Err(Error::Dimension(format!("{c} references x{xs} beyond e = {e}")));
                }
                if ys > 1 {
                    return Err(Error::Dimension(format!("{c} references y{ys}; marks are one-dimensional")));
                }
            }
        }
        if drift.marks_used() > 0 || diffusion.iter().any(|v| v.marks_used() > 0) {
            return Err(Error::Dimension("only the jump field may depend on marks".into()));
        }
        if !jump.is_zero() && measure.is_none() {
            return Err(Error::invalid("a non-zero jump field needs a jump measure"));
        }
        Ok(Self { name: name.into(), drift, diffusion, jump, measure })
    }

    /// State dimension `e`.
    pub fn state_dim(&self) -> usize {
        self.drift.dim()
    }

    /// Brownian dimension `d`.
    pub fn noise_dim(&self) -> usize {
        self.diffusion.len()
    }

    /// Mark dimension `n`.
    pub fn mark_dim(&self) -> usize {
        1
    }

    /// True when jumps can actually move the state.
    pub fn has_jumps(&self) -> bool {
        !self.jump.is_zero() && self.measure.is_some()
    }

    /// Same model with every diffusion field multiplied by `s`.
    pub fn with_scaled_diffusion(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.diffusion = self
            .diffusion
            .iter()
            .map(|v| v.map(|c| Expr::product(Expr::Const(s), c.clone())))
            .collect();
        out
    }
}

/// `[A, B] = DB·A − DA·B`, built symbolically. Marks and time in either
/// field are treated as parameters.
pub fn lie_bracket(a: &VectorField, b: &VectorField) -> VectorField {
    bracket_with(a, b, &mut |c, j| c.diff(Var::X(j)))
}

/// Bracket with a caller-supplied state derivative.
pub(crate) fn bracket_with(a: &VectorField, b: &VectorField, diff: &mut impl FnMut(&Expr, usize) -> Expr) -> VectorField {
    let e = a.dim();
    assert_eq!(e, b.dim(), "bracket of fields with different dimensions");
    let (ac, bc) = (a.components(), b.components());
    let comps = (0..e)
        .map(|i| {
            let mut acc = Expr::zero();
            for j in 0..e {
                let db = diff(&bc[i], j);
                let da = diff(&ac[i], j);
                acc = Expr::sum(acc, Expr::product(db, ac[j].clone()));
                acc = Expr::difference(acc, Expr::product(da, bc[j].clone()));
            }
            acc.simplified()
        })
        .collect();
    VectorField::new(comps)
}

/// `V_0 = Z − ½ Σ_i DV_i·V_i`.
pub fn compute_v0(drift: &VectorField, diffusion: &[VectorField]) -> VectorField {
    let e = drift.dim();
    let comps = (0..e)
        .map(|i| {
            let mut acc = drift.components()[i].clone();
            for v in diffusion {
                let vc = v.components();
                for j in 0..e {
                    let term = Expr::product(vc[i].diff(Var::X(j)), vc[j].clone());
                    acc = Expr::difference(acc, Expr::product(Expr::Const(0.5), term));
                }
            }
            acc.simplified()
        })
        .collect();
    VectorField::new(comps)
}

/// Evaluator of `x ↦ [V_0, K](x) − ∫ [Y(·, y), K](x) G(dy)`.
#[derive(Clone, Debug)]
pub struct JumpCorrectedBracket {
    pub drift_bracket: VectorField,
    /// `[Y(·, y1), K]`, a field in `x` and the mark `y1`.
    pub jump_kernel: VectorField,
    measure: Option<Arc<LevyMeasure>>,
}

impl JumpCorrectedBracket {
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.drift_bracket.eval(x, &[], 0.0)?;
        if let Some(g) = &self.measure {
            if !self.jump_kernel.is_zero() {
                let integral = compensator_integral(&self.jump_kernel, g, Region::All, x)?;
                for (o, v) in out.iter_mut().zip(integral) {
                    *o -= v;
                }
            }
        }
        Ok(out)
    }
}

pub fn jump_corrected_drift_bracket(
    v0: &VectorField,
    k: &VectorField,
    jump: &VectorField,
    measure: Option<Arc<LevyMeasure>>,
) -> JumpCorrectedBracket {
    JumpCorrectedBracket { drift_bracket: lie_bracket(v0, k), jump_kernel: lie_bracket(jump, k), measure }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketCondition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `16 m(j0) > 3 (kappa − n) max((8 − r + v/2)/(kappa − n + alpha), 1/(4 alpha))`
/// with `m(j) = 2^{-4j}`.
pub fn bracket_condition_check(j0: u32, kappa: f64, n: usize, alpha: f64, r: f64, v: f64) -> Result<BracketCondition> {
    let excess = kappa - n as f64;
    if !(excess >= 0.0) {
        return Err(Error::invalid(format!("kappa = {kappa} must be >= n = {n}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha must be positive"));
    }
    if !(r > 0.0 && v > 0.0 && 18.0 * r + 9.0 * v < 8.0) {
        return Err(Error::invalid(format!("need r, v > 0 and 18r + 9v < 8, got r = {r}, v = {v}")));
    }
    let lhs = 16.0 * 2f64.powi(-4 * j0 as i32);
    let rhs = 3.0 * excess * ((8.0 - r + 0.5 * v) / (excess + alpha)).max(1.0 / (4.0 * alpha));
    Ok(BracketCondition { holds: lhs > rhs, lhs, rhs })
}
