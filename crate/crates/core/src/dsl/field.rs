use std::fmt;
use std::sync::Arc;

use super::eval::{EvalError, Tape};
use super::expr::{Expr, Var};
use crate::linalg::Matrix;
use crate::scalar::Dual;

/// A vector field `R^e -> R^e`, possibly depending on marks `y` and time.
///
/// Components are kept both as expressions (for symbolic work) and as
/// compiled tapes (for evaluation in simulation loops).
#[derive(Clone)]
pub struct VectorField {
    comps: Arc<[Expr]>,
    tapes: Arc<[Tape]>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.comps.iter().map(|c| c.to_string())).finish()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.comps == other.comps
    }
}

impl VectorField {
    pub fn new(comps: Vec<Expr>) -> Self {
        let tapes: Vec<Tape> = comps.iter().map(Tape::compile).collect();
        Self { comps: comps.into(), tapes: tapes.into() }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![Expr::zero(); dim])
    }

    /// Constant field.
    pub fn constant(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Expr::Const(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn depends_on_state(&self) -> bool {
        self.comps.iter().any(Expr::depends_on_state)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.comps.iter().any(|c| c.depends_on(v))
    }

    /// Number of marks referenced (highest `y` index + 1).
    pub fn marks_used(&self) -> usize {
        self.comps.iter().map(|c| c.dims_used().1).max().unwrap_or(0)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        Self::new(self.comps.iter().map(f).collect())
    }

    pub fn simplified(&self) -> Self {
        self.map(Expr::simplified)
    }

    pub fn eval_into(&self, x: &[f64], y: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        for (o, tape) in out.iter_mut().zip(self.tapes.iter()) {
            *o = tape.eval(x, y, t)?;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, y, t, &mut out)?;
        Ok(out)
    }

    /// Jacobian in the state variables, column by column from directional
    /// (dual-number) evaluations along the basis vectors.
    pub fn jacobian(&self, x: &[f64], y: &[f64], t: f64) -> Result<Matrix<f64>, EvalError> {
        let e = x.len();
        let mut jac = Matrix::zeros(e);
        self.jacobian_into(x, y, t, &mut jac)?;
        Ok(jac)
    }

    pub fn jacobian_into(
        &self,
        x: &[f64],
        y: &[f64],
        t: f64,
        jac: &mut Matrix<f64>,
    ) -> Result<(), EvalError> {
        let e = x.len();
        let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant_of(v)).collect();
        let yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant_of(v)).collect();
        let td = Dual::constant_of(t);
        for j in 0..e {
            xd[j].deriv = 1.0;
            for (i, tape) in self.tapes.iter().enumerate() {
                jac[(i, j)] = tape.eval(&xd, &yd, td)?.deriv;
            }
            xd[j].deriv = 0.0;
        }
        Ok(())
    }

    /// Symbolic Jacobian entries `d comp_i / d x_j`.
    pub fn symbolic_jacobian(&self, e: usize) -> Vec<Vec<Expr>> {
        self.comps
            .iter()
            .map(|c| (0..e).map(|j| c.diff(Var::X(j))).collect())
            .collect()
    }
}

/// Jacobian of a list of component expressions at a point.
pub fn jacobian(field: &[Expr], x: &[f64], y: &[f64], t: f64) -> Result<Matrix<f64>, EvalError> {
    VectorField::new(field.to_vec()).jacobian(x, y, t)
}
