//! Scalar abstraction shared by the expression evaluator and the small dense
//! linear algebra.
//!
//! Expressions are evaluated over any [`Scalar`]: plain floats give values,
//! [`Dual`] numbers carry one directional derivative alongside.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

/// Floating point: f32 or f64.
pub trait Real: Float + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Numeric type the expression evaluator runs on.
///
/// `primal` exposes the plain value so domain checks (log of a non-positive
/// number, division by zero) are made on the same number regardless of
/// whether derivatives are being carried.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn primal(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `self^p` for a constant exponent.
    fn powf_const(self, p: f64) -> Self;
    /// `self^p` with both base and exponent varying; requires a positive base.
    fn pow(self, p: Self) -> Self;
}

macro_rules! impl_scalar_float {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn constant(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn primal(&self) -> f64 {
                *self as f64
            }
            #[inline]
            fn sin(self) -> Self {
                <$t>::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                <$t>::cos(self)
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            #[inline]
            fn tanh(self) -> Self {
                <$t>::tanh(self)
            }
            #[inline]
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn powf_const(self, p: f64) -> Self {
                <$t>::powf(self, p as $t)
            }
            #[inline]
            fn pow(self, p: Self) -> Self {
                <$t>::powf(self, p)
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);

/// Forward-mode dual number: a value and its derivative along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<F> {
    pub value: F,
    pub deriv: F,
}

impl<F: Real> Dual<F> {
    #[inline]
    pub fn new(value: F, deriv: F) -> Self {
        Self { value, deriv }
    }

    #[inline]
    pub fn constant_of(value: F) -> Self {
        Self { value, deriv: F::zero() }
    }

    #[inline]
    fn chain(self, value: F, slope: F) -> Self {
        Self { value, deriv: self.deriv * slope }
    }
}

impl<F: Real> Add for Dual<F> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.deriv + rhs.deriv)
    }
}

impl<F: Real> Sub for Dual<F> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.deriv - rhs.deriv)
    }
}

impl<F: Real> Mul for Dual<F> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.deriv * rhs.value + self.value * rhs.deriv,
        )
    }
}

impl<F: Real> Div for Dual<F> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Self::new(q, (self.deriv - q * rhs.deriv) / rhs.value)
    }
}

impl<F: Real> Neg for Dual<F> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.value, -self.deriv)
    }
}

impl<F: Real> Scalar for Dual<F> {
    #[inline]
    fn constant(v: f64) -> Self {
        Self::constant_of(F::from(v).unwrap())
    }

    #[inline]
    fn primal(&self) -> f64 {
        self.value.to_f64().unwrap()
    }

    #[inline]
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }

    #[inline]
    fn cos(self) -> Self {
        self.chain(self.value.cos(), -self.value.sin())
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }

    #[inline]
    fn ln(self) -> Self {
        self.chain(self.value.ln(), self.value.recip())
    }

    #[inline]
    fn tanh(self) -> Self {
        let th = self.value.tanh();
        self.chain(th, F::one() - th * th)
    }

    /// The derivative of `abs` at exactly zero is taken to be zero.
    #[inline]
    fn abs(self) -> Self {
        let slope = if self.value > F::zero() {
            F::one()
        } else if self.value < F::zero() {
            -F::one()
        } else {
            F::zero()
        };
        self.chain(self.value.abs(), slope)
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, (s + s).recip())
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::constant_of(F::one());
        }
        let nf = F::from(n).unwrap();
        self.chain(self.value.powi(n), nf * self.value.powi(n - 1))
    }

    #[inline]
    fn powf_const(self, p: f64) -> Self {
        let pf = F::from(p).unwrap();
        self.chain(self.value.powf(pf), pf * self.value.powf(pf - F::one()))
    }

    #[inline]
    fn pow(self, p: Self) -> Self {
        let v = self.value.powf(p.value);
        let deriv = v * (p.deriv * self.value.ln() + p.value * self.deriv / self.value);
        Self::new(v, deriv)
    }
}
