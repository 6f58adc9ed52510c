//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands,
//! and geometric panelling for integrals with a singular point at zero.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// weights of the embedded 7-point Gauss rule at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Panels toward a singular endpoint before giving up.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-14, max_intervals: 400, max_panels: 160 }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadOutput {
    pub value: Vec<f64>,
    /// Estimated absolute error (max over components).
    pub error: f64,
}

impl QuadOutput {
    pub fn zeros(dim: usize) -> Self {
        Self { value: vec![0.0; dim], error: 0.0 }
    }

    fn accumulate(&mut self, other: &QuadOutput) {
        for (a, b) in self.value.iter_mut().zip(&other.value) {
            *a += b;
        }
        self.error += other.error;
    }

    fn norm(&self) -> f64 {
        norm_inf(&self.value)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Result<Segment>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    for k in 0..8 {
        let nodes: &[f64] = if k == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in nodes {
            f(center + s * half * XGK[k], buf)?;
            for i in 0..dim {
                kron[i] += WGK[k] * buf[i];
                if k % 2 == 1 {
                    gauss[i] += WG[k / 2] * buf[i];
                }
            }
        }
    }
    let mut error = 0.0_f64;
    for i in 0..dim {
        kron[i] *= half;
        gauss[i] *= half;
        error = error.max((kron[i] - gauss[i]).abs());
    }
    if kron.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature { achieved: f64::INFINITY, requested: 0.0 });
    }
    Ok(Segment { a, b, value: kron, error })
}

/// Adaptive integration of a vector integrand over `[a, b]`. The integrand
/// writes its `dim` components into the provided slice.
pub fn integrate_vec<F>(mut f: F, a: f64, b: f64, dim: usize, opts: &QuadOptions) -> Result<QuadOutput>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    if a == b {
        return Ok(QuadOutput::zeros(dim));
    }
    let mut buf = vec![0.0; dim];
    let mut segs = vec![gk15(&mut f, a, b, dim, &mut buf)?];
    loop {
        let mut total = vec![0.0; dim];
        let mut err = 0.0;
        for s in &segs {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            err += s.error;
        }
        let scale = norm_inf(&total);
        let target = opts.abs_tol.max(opts.rel_tol * scale);
        if err <= target {
            return Ok(QuadOutput { value: total, error: err });
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: if scale > 0.0 { err / scale } else { err },
                requested: opts.rel_tol,
            });
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let s = segs.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::Quadrature { achieved: err / scale.max(f64::MIN_POSITIVE), requested: opts.rel_tol });
        }
        segs.push(gk15(&mut f, s.a, mid, dim, &mut buf)?);
        segs.push(gk15(&mut f, mid, s.b, dim, &mut buf)?);
    }
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let out = integrate_vec(
        |y, o| {
            o[0] = f(y);
            Ok(())
        },
        a,
        b,
        1,
        opts,
    )?;
    Ok((out.value[0], out.error))
}

/// `∫_a^b` over doubling panels `[a, 2a], [2a, 4a], ...`; suited to
/// integrands varying on a logarithmic scale, with `0 < a`.
pub fn integrate_geometric<F>(mut f: F, a: f64, b: f64, dim: usize, opts: &QuadOptions) -> Result<QuadOutput>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut out = QuadOutput::zeros(dim);
    if a >= b {
        return Ok(out);
    }
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        let hi = if b - hi < 1e-12 * b { b } else { hi };
        let panel = integrate_vec(&mut f, lo, hi, dim, opts)?;
        out.accumulate(&panel);
        lo = hi;
    }
    Ok(out)
}

/// `∫_0^b` for integrands that may be singular (but integrable) at zero.
///
/// Integrates over halving panels `[b/2^{k+1}, b/2^k]` until the remaining
/// tail is below tolerance. Panel contributions of power-law integrands
/// decay geometrically; once the panel ratio has stabilised the tail is
/// summed as a geometric series. A ratio that stays at or above one means
/// the integral diverges, reported as a quadrature error.
pub fn integrate_to_zero<F>(mut f: F, b: f64, dim: usize, opts: &QuadOptions) -> Result<QuadOutput>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    let mut out = QuadOutput::zeros(dim);
    if b <= 0.0 {
        return Ok(out);
    }
    let mut prev: Option<Vec<f64>> = None;
    let mut prev_ratio: Option<Vec<f64>> = None;
    let mut non_decreasing = 0usize;
    let mut hi = b;
    for k in 0..opts.max_panels {
        let lo = 0.5 * hi;
        let panel = integrate_vec(&mut f, lo, hi, dim, opts)?;
        out.accumulate(&panel);
        hi = lo;

        let p = panel.value;
        let scale = out.norm();
        let tol = opts.abs_tol.max(opts.rel_tol * scale);
        if let Some(q) = &prev {
            let ratio: Vec<f64> = p
                .iter()
                .zip(q)
                .map(|(&a, &b)| if b != 0.0 { a / b } else if a == 0.0 { 0.0 } else { f64::INFINITY })
                .collect();
            let worst = ratio.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            if worst >= 1.0 && norm_inf(&p) > tol {
                non_decreasing += 1;
            } else {
                non_decreasing = 0;
            }
            if non_decreasing >= 12 && k >= 24 {
                return Err(Error::Quadrature { achieved: f64::INFINITY, requested: opts.rel_tol });
            }

            // plain geometric tail bound
            let tail: f64 = p
                .iter()
                .zip(&ratio)
                .map(|(&a, &r)| if r.abs() < 1.0 { (a * r / (1.0 - r)).abs() } else { f64::INFINITY })
                .fold(0.0, f64::max);
            let tail = if norm_inf(&p) <= opts.abs_tol { 0.0 } else { tail };
            if k >= 3 && tail <= tol {
                out.error += tail;
                return Ok(out);
            }

            // stabilised ratios: sum the geometric series explicitly
            if let Some(pr) = &prev_ratio {
                let stable = ratio.iter().zip(pr).zip(&p).all(|((&r, &s), &a)| {
                    a.abs() <= opts.abs_tol || (r.abs() < 0.999 && (r - s).abs() <= 1e-6 * r.abs().max(1e-3))
                });
                if k >= 6 && stable {
                    let mut extra_err = 0.0_f64;
                    for ((v, &a), (&r, &s)) in out.value.iter_mut().zip(&p).zip(ratio.iter().zip(pr)) {
                        if a.abs() <= opts.abs_tol {
                            continue;
                        }
                        let t = a * r / (1.0 - r);
                        *v += t;
                        extra_err = extra_err.max(t.abs() * (r - s).abs() / (1.0 - r.abs()) + 1e-12 * t.abs());
                    }
                    out.error += extra_err;
                    if out.error <= opts.abs_tol.max(opts.rel_tol * out.norm()) {
                        return Ok(out);
                    }
                    return Err(Error::Quadrature {
                        achieved: out.error / out.norm().max(f64::MIN_POSITIVE),
                        requested: opts.rel_tol,
                    });
                }
            }
            prev_ratio = Some(ratio);
        }
        prev = Some(p);
    }
    Err(Error::Quadrature {
        achieved: out.error / out.norm().max(f64::MIN_POSITIVE),
        requested: opts.rel_tol,
    })
}
