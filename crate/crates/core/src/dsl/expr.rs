use std::fmt;
use std::sync::Arc;

/// A variable an expression may reference. Indices are zero-based; they
/// print one-based (`x1`, `y1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// State coordinate.
    X(usize),
    /// Jump-mark coordinate.
    Y(usize),
    /// Time.
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Tanh,
    Abs,
    Sqrt,
    /// Derivative of `abs`; produced by symbolic differentiation, with
    /// `sign(0) = 0`.
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    /// Plain evaluation on a constant, `None` outside the domain.
    fn fold(self, v: f64) -> Option<f64> {
        let r = match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log if v > 0.0 => v.ln(),
            Func::Tanh => v.tanh(),
            Func::Abs => v.abs(),
            Func::Sqrt if v >= 0.0 => v.sqrt(),
            Func::Sign => sign(v),
            _ => return None,
        };
        r.is_finite().then_some(r)
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Scalar expression over state coordinates, jump marks and time.
///
/// Children are reference counted so symbolic derivatives and brackets share
/// sub-trees. Values are immutable once built and may be shared across
/// threads.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

// Raw constructors: build exactly the requested node.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }

    pub fn y(i: usize) -> Expr {
        Expr::Var(Var::Y(i))
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Arc::new(a))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Arc::new(a))
    }
}

// Simplifying builders: constant folding and the usual 0/1 identities.
// Nothing more; this is not a computer-algebra system.
impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn sum(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => match b {
                Expr::Neg(inner) => Expr::Binary(BinOp::Sub, Arc::new(a), inner),
                _ => Expr::add(a, b),
            },
        }
    }

    pub fn difference(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(0.0), _) => Expr::negate(b),
            (_, Some(0.0)) => a,
            _ if a == b => Expr::zero(),
            _ => match b {
                Expr::Neg(inner) => Expr::Binary(BinOp::Add, Arc::new(a), inner),
                _ => Expr::sub(a, b),
            },
        }
    }

    pub fn product(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(-1.0), _) => Expr::negate(b),
            (_, Some(-1.0)) => Expr::negate(a),
            // keep constants on the left
            (None, Some(_)) => Expr::mul(b, a),
            _ => Expr::mul(a, b),
        }
    }

    pub fn quotient(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => a,
            _ => Expr::div(a, b),
        }
    }

    pub fn power(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (_, Some(0.0)) => Expr::one(),
            (_, Some(1.0)) => a,
            (Some(x), Some(p)) => {
                let v = x.powf(p);
                if v.is_finite() {
                    Expr::Const(v)
                } else {
                    Expr::pow(a, b)
                }
            }
            _ => Expr::pow(a, b),
        }
    }

    pub fn negate(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => (*inner).clone(),
            _ => Expr::neg(a),
        }
    }

    pub fn apply(f: Func, a: Expr) -> Expr {
        if let Some(v) = a.as_const().and_then(|c| f.fold(c)) {
            return Expr::Const(v);
        }
        Expr::call(f, a)
    }

    /// Canonical form: rebuilt bottom-up through the simplifying builders.
    /// Two expressions with equal canonical forms are treated as duplicates.
    pub fn simplified(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::negate(a.simplified()),
            Expr::Call(f, a) => Expr::apply(*f, a.simplified()),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.simplified(), b.simplified());
                match op {
                    BinOp::Add => Expr::sum(a, b),
                    BinOp::Sub => Expr::difference(a, b),
                    BinOp::Mul => Expr::product(a, b),
                    BinOp::Div => Expr::quotient(a, b),
                    BinOp::Pow => Expr::power(a, b),
                }
            }
        }
    }
}

// Structure queries and rewrites.
impl Expr {
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Binary(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    /// True when any state coordinate appears.
    pub fn depends_on_state(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => matches!(w, Var::X(_)),
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_state(),
            Expr::Binary(_, a, b) => a.depends_on_state() || b.depends_on_state(),
        }
    }

    /// Visit every variable occurrence.
    pub fn for_each_var(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
        }
    }

    /// `(max state index + 1, max mark index + 1)` referenced.
    pub fn dims_used(&self) -> (usize, usize) {
        let (mut e, mut n) = (0, 0);
        self.for_each_var(&mut |v| match v {
            Var::X(i) => e = e.max(i + 1),
            Var::Y(i) => n = n.max(i + 1),
            Var::T => {}
        });
        (e, n)
    }

    /// Replace variables according to `map`; `None` keeps the variable.
    pub fn substitute(&self, map: &impl Fn(Var) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map(*v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(map)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(map), b.substitute(map)),
        }
    }

    /// Rename mark variable `y{from}` to `y{to}` (zero-based).
    pub fn rename_mark(&self, from: usize, to: usize) -> Expr {
        self.substitute(&|v| (v == Var::Y(from)).then(|| Expr::y(to)))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }
}

// Symbolic differentiation.
impl Expr {
    /// Exact partial derivative with respect to `v`.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Neg(a) => Expr::negate(a.diff(v)),
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.as_ref(), b.as_ref());
                match op {
                    BinOp::Add => Expr::sum(a.diff(v), b.diff(v)),
                    BinOp::Sub => Expr::difference(a.diff(v), b.diff(v)),
                    BinOp::Mul => Expr::sum(
                        Expr::product(a.diff(v), b.clone()),
                        Expr::product(a.clone(), b.diff(v)),
                    ),
                    BinOp::Div => {
                        // a'/b - a b'/b^2
                        let first = Expr::quotient(a.diff(v), b.clone());
                        let second = Expr::quotient(
                            Expr::product(a.clone(), b.diff(v)),
                            Expr::power(b.clone(), Expr::Const(2.0)),
                        );
                        Expr::difference(first, second)
                    }
                    BinOp::Pow => {
                        if !b.depends_on(v) {
                            // b a^(b-1) a'
                            let reduced = match b.as_const() {
                                Some(p) => Expr::Const(p - 1.0),
                                None => Expr::difference(b.clone(), Expr::one()),
                            };
                            Expr::product(
                                Expr::product(b.clone(), Expr::power(a.clone(), reduced)),
                                a.diff(v),
                            )
                        } else {
                            // a^b (b' ln a + b a'/a)
                            let log_term =
                                Expr::product(b.diff(v), Expr::apply(Func::Log, a.clone()));
                            let ratio_term = Expr::quotient(
                                Expr::product(b.clone(), a.diff(v)),
                                a.clone(),
                            );
                            Expr::product(self.clone(), Expr::sum(log_term, ratio_term))
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let inner = a.as_ref().clone();
                let da = a.diff(v);
                let outer = match f {
                    Func::Sin => Expr::apply(Func::Cos, inner),
                    Func::Cos => Expr::negate(Expr::apply(Func::Sin, inner)),
                    Func::Exp => self.clone(),
                    Func::Log => return Expr::quotient(da, inner),
                    Func::Tanh => Expr::difference(
                        Expr::one(),
                        Expr::power(self.clone(), Expr::Const(2.0)),
                    ),
                    Func::Abs => Expr::apply(Func::Sign, inner),
                    Func::Sqrt => {
                        return Expr::quotient(da, Expr::product(Expr::Const(2.0), self.clone()))
                    }
                    Func::Sign => return Expr::zero(),
                };
                Expr::product(outer, da)
            }
        }
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(c) if c.is_sign_negative() => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn op_precedence(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul | BinOp::Div => 2,
        BinOp::Pow => 4,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Y(i) => write!(f, "y{}", i + 1),
            Var::T => write!(f, "t"),
        }
    }
}

/// Prints with the minimal parentheses needed for the parser to rebuild the
/// same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, precedence(a) < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = op_precedence(*op);
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    write_child(f, a, precedence(a) <= p)?;
                    write!(f, "{sym}")?;
                    write_child(f, b, precedence(b) < p)
                } else {
                    write_child(f, a, precedence(a) < p)?;
                    write!(f, "{sym}")?;
                    write_child(f, b, precedence(b) <= p)
                }
            }
        }
    }
}
