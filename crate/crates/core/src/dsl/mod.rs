//! Expression language for vector-field components.
//!
//! Expressions reference state coordinates `x1..xe`, jump marks `y1..yn` and
//! time `t`, and support `+ - * / ^`, unary minus and the functions `sin cos
//! exp log tanh abs sqrt`. Derivatives are exact: first derivatives by
//! forward-mode dual numbers at evaluation time, and arbitrary-order
//! derivatives by symbolic differentiation of the tree (used for nested Lie
//! brackets).
//!
//! `abs` is not differentiable at zero; its derivative there is taken to be
//! `0`, expressed symbolically as `sign(·)` with `sign(0) = 0`.

mod eval;
mod expr;
mod field;
mod parser;

pub use eval::{DomainErrorKind, EvalError, Tape};
pub use expr::{BinOp, Expr, Func, Var};
pub use field::{jacobian, VectorField};
pub use parser::{parse_expr, ParseError, ParseErrorKind};

/// Parse a list of component strings into a field.
pub fn parse_field<S: AsRef<str>>(
    comps: &[S],
    state_dim: usize,
    mark_dim: usize,
) -> Result<VectorField, ParseError> {
    let exprs = comps
        .iter()
        .map(|c| parse_expr(c.as_ref(), state_dim, mark_dim))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VectorField::new(exprs))
}
