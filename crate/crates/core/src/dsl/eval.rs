use std::fmt;

use super::expr::{sign, BinOp, Expr, Func, Var};
use crate::scalar::{Dual, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainErrorKind {
    LogNonPositive,
    DivisionByZero,
    SqrtNegative,
    PowNegativeBase,
    NonFinite,
    MissingVariable,
}

/// Evaluation failure, located by the rendered sub-expression that failed.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalError {
    pub kind: DomainErrorKind,
    pub node: String,
    pub value: f64,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            DomainErrorKind::LogNonPositive => "log of non-positive value",
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::SqrtNegative => "sqrt of negative value",
            DomainErrorKind::PowNegativeBase => "non-integer power of negative base",
            DomainErrorKind::NonFinite => "non-finite result",
            DomainErrorKind::MissingVariable => "variable not supplied",
        };
        write!(f, "{what} in `{}` (argument {})", self.node, self.value)
    }
}

impl std::error::Error for EvalError {}

fn integer_exponent(p: f64) -> Option<i32> {
    (p.fract() == 0.0 && p.abs() <= 64.0).then_some(p as i32)
}

fn func_check<S: Scalar>(f: Func, a: S) -> Result<S, DomainErrorKind> {
    let v = a.primal();
    Ok(match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Log if v <= 0.0 => return Err(DomainErrorKind::LogNonPositive),
        Func::Log => a.ln(),
        Func::Tanh => a.tanh(),
        Func::Abs => a.abs(),
        Func::Sqrt if v < 0.0 => return Err(DomainErrorKind::SqrtNegative),
        Func::Sqrt => a.sqrt(),
        Func::Sign => S::constant(sign(v)),
    })
}

fn pow_const<S: Scalar>(a: S, p: f64) -> Result<S, DomainErrorKind> {
    let v = a.primal();
    match integer_exponent(p) {
        Some(n) if n < 0 && v == 0.0 => Err(DomainErrorKind::DivisionByZero),
        Some(n) => Ok(a.powi(n)),
        None if v < 0.0 => Err(DomainErrorKind::PowNegativeBase),
        None if v == 0.0 && p < 0.0 => Err(DomainErrorKind::DivisionByZero),
        None => Ok(a.powf_const(p)),
    }
}

fn pow_general<S: Scalar>(a: S, b: S) -> Result<S, DomainErrorKind> {
    if a.primal() <= 0.0 {
        return Err(DomainErrorKind::PowNegativeBase);
    }
    Ok(a.pow(b))
}

fn div_check<S: Scalar>(a: S, b: S) -> Result<S, DomainErrorKind> {
    if b.primal() == 0.0 {
        return Err(DomainErrorKind::DivisionByZero);
    }
    Ok(a / b)
}

impl Expr {
    /// Evaluate over any scalar type. `x`, `y` are the state and mark
    /// vectors.
    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S], t: S) -> Result<S, EvalError> {
        let r = self.eval_inner(x, y, t)?;
        if !r.primal().is_finite() {
            return Err(EvalError {
                kind: DomainErrorKind::NonFinite,
                node: self.to_string(),
                value: r.primal(),
            });
        }
        Ok(r)
    }

    fn eval_inner<S: Scalar>(&self, x: &[S], y: &[S], t: S) -> Result<S, EvalError> {
        let located = |kind, value: f64| EvalError { kind, node: self.to_string(), value };
        match self {
            Expr::Const(c) => Ok(S::constant(*c)),
            Expr::Var(v) => {
                let got = match v {
                    Var::X(i) => x.get(*i),
                    Var::Y(i) => y.get(*i),
                    Var::T => Some(&t),
                };
                got.copied().ok_or_else(|| located(DomainErrorKind::MissingVariable, f64::NAN))
            }
            Expr::Neg(a) => Ok(-a.eval_inner(x, y, t)?),
            Expr::Call(f, a) => {
                let a = a.eval_inner(x, y, t)?;
                func_check(*f, a).map_err(|k| located(k, a.primal()))
            }
            Expr::Binary(op, a, b) => {
                if *op == BinOp::Pow {
                    let base = a.eval_inner(x, y, t)?;
                    return match b.as_const() {
                        Some(p) => pow_const(base, p),
                        None => pow_general(base, b.eval_inner(x, y, t)?),
                    }
                    .map_err(|k| located(k, base.primal()));
                }
                let a = a.eval_inner(x, y, t)?;
                let b = b.eval_inner(x, y, t)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => div_check(a, b).map_err(|k| located(k, b.primal())),
                    BinOp::Pow => unreachable!(),
                }
            }
        }
    }

    /// Value and exact directional derivative along `dir` in the state
    /// variables.
    pub fn eval_directional(
        &self,
        x: &[f64],
        y: &[f64],
        t: f64,
        dir: &[f64],
    ) -> Result<(f64, f64), EvalError> {
        let xd: Vec<Dual<f64>> = x
            .iter()
            .zip(dir.iter().chain(std::iter::repeat(&0.0)))
            .map(|(&v, &d)| Dual::new(v, d))
            .collect();
        let yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant_of(v)).collect();
        let r = self.eval(&xd, &yd, Dual::constant_of(t))?;
        Ok((r.value, r.deriv))
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    X(usize),
    Y(usize),
    T,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    PowC(f64),
    Pow,
    Call(Func),
}

/// Postfix program compiled from an [`Expr`] for repeated evaluation.
///
/// On a domain failure the tape re-runs the tree evaluator to produce the
/// located error, so both paths report identical errors.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    depth: usize,
    source: Expr,
}

const INLINE_STACK: usize = 32;

impl Tape {
    pub fn compile(expr: &Expr) -> Tape {
        let mut ops = Vec::with_capacity(expr.node_count());
        emit(expr, &mut ops);
        let mut depth = 0usize;
        let mut cur = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::X(_) | Op::Y(_) | Op::T => cur += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => cur -= 1,
                Op::Neg | Op::PowC(_) | Op::Call(_) => {}
            }
            depth = depth.max(cur);
        }
        Tape { ops, depth, source: expr.clone() }
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S], t: S) -> Result<S, EvalError> {
        let r = if self.depth <= INLINE_STACK {
            let mut stack = [S::constant(0.0); INLINE_STACK];
            self.run(&mut stack, x, y, t)
        } else {
            let mut stack = vec![S::constant(0.0); self.depth];
            self.run(&mut stack, x, y, t)
        };
        match r {
            Some(v) if v.primal().is_finite() => Ok(v),
            _ => Err(self.source.eval(x, y, t).err().unwrap_or_else(|| EvalError {
                kind: DomainErrorKind::NonFinite,
                node: self.source.to_string(),
                value: f64::NAN,
            })),
        }
    }

    #[inline]
    fn run<S: Scalar>(&self, stack: &mut [S], x: &[S], y: &[S], t: S) -> Option<S> {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = S::constant(c);
                    sp += 1;
                }
                Op::X(i) => {
                    stack[sp] = *x.get(i)?;
                    sp += 1;
                }
                Op::Y(i) => {
                    stack[sp] = *y.get(i)?;
                    sp += 1;
                }
                Op::T => {
                    stack[sp] = t;
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::PowC(p) => stack[sp - 1] = pow_const(stack[sp - 1], p).ok()?,
                Op::Call(f) => stack[sp - 1] = func_check(f, stack[sp - 1]).ok()?,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    sp -= 1;
                    let b = stack[sp];
                    let a = stack[sp - 1];
                    stack[sp - 1] = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => div_check(a, b).ok()?,
                        _ => pow_general(a, b).ok()?,
                    };
                }
            }
        }
        Some(stack[0])
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(Var::X(i)) => ops.push(Op::X(*i)),
        Expr::Var(Var::Y(i)) => ops.push(Op::Y(*i)),
        Expr::Var(Var::T) => ops.push(Op::T),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Binary(BinOp::Pow, a, b) if b.as_const().is_some() => {
            emit(a, ops);
            ops.push(Op::PowC(b.as_const().unwrap()));
        }
        Expr::Binary(op, a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => Op::Pow,
            });
        }
    }
}
