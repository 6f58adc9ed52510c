#![allow(dead_code)]

use jdsmooth::dsl::{Expr, Func, VectorField};
use rand::Rng;

/// Random polynomial of degree at most 3 in `e` variables with up to four terms.
pub fn random_polynomial<R: Rng>(rng: &mut R, e: usize) -> Expr {
    let terms = rng.random_range(1..=4);
    let mut acc = Expr::zero();
    for _ in 0..terms {
        let mut term = Expr::constant((rng.random::<f64>() * 4.0 - 2.0).round() / 2.0 + 0.25);
        let degree = rng.random_range(0..=3);
        for _ in 0..degree {
            term = Expr::mul(term, Expr::x(rng.random_range(0..e)));
        }
        acc = Expr::add(acc, term);
    }
    acc
}

pub fn random_polynomial_field<R: Rng>(rng: &mut R, e: usize) -> VectorField {
    VectorField::new((0..e).map(|_| random_polynomial(rng, e)).collect())
}

/// Random smooth expression: polynomials composed with sin, cos, tanh and
/// bounded exponentials.
pub fn random_smooth<R: Rng>(rng: &mut R, e: usize, depth: usize) -> Expr {
    if depth == 0 || rng.random::<f64>() < 0.25 {
        return if rng.random::<bool>() {
            Expr::x(rng.random_range(0..e))
        } else {
            Expr::constant(rng.random::<f64>() * 3.0 - 1.5)
        };
    }
    let a = random_smooth(rng, e, depth - 1);
    match rng.random_range(0..7) {
        0 => Expr::add(a, random_smooth(rng, e, depth - 1)),
        1 => Expr::sub(a, random_smooth(rng, e, depth - 1)),
        2 => Expr::mul(a, random_smooth(rng, e, depth - 1)),
        3 => Expr::call(Func::Sin, a),
        4 => Expr::call(Func::Cos, a),
        5 => Expr::call(Func::Tanh, a),
        _ => Expr::call(Func::Exp, Expr::call(Func::Tanh, a)),
    }
}

pub fn random_point<R: Rng>(rng: &mut R, e: usize) -> Vec<f64> {
    (0..e).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

/// `DB·A − DA·B` with central differences of step `h`.
pub fn fd_bracket(a: &VectorField, b: &VectorField, x: &[f64], h: f64) -> Vec<f64> {
    let e = x.len();
    let av = a.eval(x, &[], 0.0).unwrap();
    let bv = b.eval(x, &[], 0.0).unwrap();
    let mut out = vec![0.0; e];
    for j in 0..e {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (bp, bm) = (b.eval(&xp, &[], 0.0).unwrap(), b.eval(&xm, &[], 0.0).unwrap());
        let (ap, am) = (a.eval(&xp, &[], 0.0).unwrap(), a.eval(&xm, &[], 0.0).unwrap());
        for i in 0..e {
            out[i] += (bp[i] - bm[i]) / (2.0 * h) * av[j] - (ap[i] - am[i]) / (2.0 * h) * bv[j];
        }
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `‖a − b‖ / max(‖b‖, 1)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    norm(&diff) / norm(b).max(1.0)
}
