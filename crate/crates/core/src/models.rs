//! Built-in models.

use std::sync::Arc;

use crate::dsl::{parse_field, VectorField};
use crate::error::Result;
use crate::fields::FieldSystem;
use crate::levy::LevyMeasure;

fn field(comps: &[&str], e: usize) -> Result<VectorField> {
    Ok(parse_field(comps, e, 1)?)
}

fn constant(comps: &[f64]) -> VectorField {
    VectorField::constant(comps)
}

/// Ornstein–Uhlenbeck: `dx = a x dt + sigma dW`.
pub fn linear_additive(a: f64, sigma: f64) -> Result<FieldSystem> {
    let drift = field(&[&format!("{a:?}*x1")], 1)?;
    FieldSystem::new("linear_additive", drift, vec![constant(&[sigma])], VectorField::zero(1), None)
}

/// Geometric Brownian motion: `dx = a x dt + sigma x dW`.
pub fn linear_multiplicative(a: f64, sigma: f64) -> Result<FieldSystem> {
    let drift = field(&[&format!("{a:?}*x1")], 1)?;
    let diffusion = field(&[&format!("{sigma:?}*x1")], 1)?;
    FieldSystem::new("linear_multiplicative", drift, vec![diffusion], VectorField::zero(1), None)
}

/// `V_1 = (1, 0)`, `Z = (0, x1)`: noise enters the first coordinate only
/// and reaches the second through the drift.
pub fn heisenberg() -> Result<FieldSystem> {
    FieldSystem::new(
        "heisenberg",
        field(&["0", "x1"], 2)?,
        vec![constant(&[1.0, 0.0])],
        VectorField::zero(2),
        None,
    )
}

/// Brownian motion on the Heisenberg group: two noises, the third
/// direction generated by their bracket.
pub fn heisenberg_group() -> Result<FieldSystem> {
    FieldSystem::new(
        "heisenberg_group",
        VectorField::zero(3),
        vec![field(&["1", "0", "-0.5*x2"], 3)?, field(&["0", "1", "0.5*x1"], 3)?],
        VectorField::zero(3),
        None,
    )
}

pub const DEFAULT_JUMP_PROFILE: [&str; 2] = ["0.5*tanh(x1)", "0.5*cos(x1)"];

/// Heisenberg-type diffusion plus jumps `Y(x, y) = Ỹ(x) y` driven by
/// `G(dy) = |y|^{-kappa} dy` on `0 < |y| <= 1`. `profile` gives the
/// components of `Ỹ`.
pub fn paper_example(kappa: f64, profile: &[&str]) -> Result<FieldSystem> {
    let e = profile.len();
    let jump: Vec<String> = profile.iter().map(|c| format!("({c})*y1")).collect();
    let jump_refs: Vec<&str> = jump.iter().map(String::as_str).collect();
    let mut drift = vec!["0"; e];
    let mut v1 = vec!["0"; e];
    v1[0] = "1";
    if e > 1 {
        drift[1] = "x1";
    }
    FieldSystem::new(
        "paper_example",
        field(&drift, e)?,
        vec![field(&v1, e)?],
        field(&jump_refs, e)?,
        Some(Arc::new(LevyMeasure::power_law(kappa)?)),
    )
}

/// `dx = ∫ y (mu − nu)(dy, dt)`.
pub fn pure_jump(measure: LevyMeasure) -> Result<FieldSystem> {
    FieldSystem::new("pure_jump", VectorField::zero(1), vec![], field(&["y1"], 1)?, Some(Arc::new(measure)))
}

/// No dynamics at all.
pub fn null(e: usize) -> Result<FieldSystem> {
    FieldSystem::new("null", VectorField::zero(e), vec![], VectorField::zero(e), None)
}

/// Constant orthonormal frame: `V_i = e_i`, `Z = 0`.
pub fn orthonormal_frame(e: usize) -> Result<FieldSystem> {
    let frame = (0..e)
        .map(|i| {
            let mut c = vec![0.0; e];
            c[i] = 1.0;
            constant(&c)
        })
        .collect();
    FieldSystem::new("orthonormal_frame", VectorField::zero(e), frame, VectorField::zero(e), None)
}

/// `V_1 = e_1`, `Z = 0`, `Y = 0` in two dimensions: the second coordinate
/// is never reached.
pub fn degenerate() -> Result<FieldSystem> {
    FieldSystem::new("degenerate", VectorField::zero(2), vec![constant(&[1.0, 0.0])], VectorField::zero(2), None)
}

/// Model from DSL strings.
pub fn custom(
    drift: &[String],
    diffusion: &[Vec<String>],
    jump: Option<&[String]>,
    measure: Option<LevyMeasure>,
) -> Result<FieldSystem> {
    let e = drift.len();
    let drift = parse_field(drift, e, 1)?;
    let diffusion = diffusion.iter().map(|v| parse_field(v, e, 1)).collect::<std::result::Result<Vec<_>, _>>()?;
    let jump = match jump {
        Some(j) => parse_field(j, e, 1)?,
        None => VectorField::zero(e),
    };
    FieldSystem::new("custom", drift, diffusion, jump, measure.map(Arc::new))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::compute_v0;

    #[test]
    fn shapes() {
        let m = linear_additive(-1.0, 1.0).unwrap();
        assert_eq!((m.state_dim(), m.noise_dim()), (1, 1));
        assert_eq!(m.drift.eval(&[2.0], &[], 0.0).unwrap(), vec![-2.0]);
        let m = linear_multiplicative(0.5, 0.3).unwrap();
        assert_eq!(m.diffusion[0].eval(&[2.0], &[], 0.0).unwrap(), vec![0.6]);
        let h = heisenberg().unwrap();
        assert_eq!(compute_v0(&h.drift, &h.diffusion), h.drift);
        let p = paper_example(1.5, &DEFAULT_JUMP_PROFILE).unwrap();
        assert!(p.has_jumps());
        assert_eq!(p.jump.eval(&[0.0, 0.0], &[0.5], 0.0).unwrap(), vec![0.0, 0.25]);
        assert_eq!(p.jump.eval(&[0.3, 1.0], &[0.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(orthonormal_frame(3).unwrap().noise_dim(), 3);
        assert_eq!(heisenberg_group().unwrap().state_dim(), 3);
        assert!(null(2).unwrap().diffusion.is_empty());
    }

    #[test]
    fn custom_model() {
        let m = custom(
            &["x2".into(), "-x1".into()],
            &[vec!["1".into(), "0".into()]],
            Some(&["0".into(), "x1*y1".into()]),
            Some(LevyMeasure::power_law(1.2).unwrap()),
        )
        .unwrap();
        assert!(m.has_jumps());
        assert!(custom(&["x3".into()], &[], None, None).is_err());
    }
}
