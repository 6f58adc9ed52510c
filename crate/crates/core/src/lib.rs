//! Simulation and numerical verification toolkit for jump diffusions
//!
//! ```text
//! x_t = x + ∫ Z(x_{s-}) ds + ∫ V(x_{s-}) dW_s + ∫∫ Y(x_{s-}, y) (μ - ν)(dy, ds)
//! ```
//!
//! with their Jacobian flows, the reduced Malliavin covariance matrix, jump
//! measure regularity conditions, the jump-corrected Hörmander bracket
//! hierarchy, and Monte Carlo harnesses for the associated probability
//! inequalities.
//!
//! Numeric kernels that do not depend on simulation (the expression
//! evaluator, dual numbers, dense linear algebra) are generic over the scalar
//! type; the Monte Carlo layers work in `f64`. The aliases below name the
//! concrete instantiations used throughout.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod density;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod inequalities;
pub mod levy;
pub mod linalg;
pub mod malliavin;
pub mod models;
pub mod quad;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Dual, Real, Scalar};

/// Dual number over `f64`.
pub type Dual64 = scalar::Dual<f64>;
/// Dual number over `f32`.
pub type Dual32 = scalar::Dual<f32>;
/// Dense square matrix over `f64`.
pub type Mat = linalg::Matrix<f64>;
/// Dense square matrix over `f32`.
pub type Mat32 = linalg::Matrix<f32>;
