//! The jump-corrected bracket hierarchy and the uniform spanning check.
//!
//! `L_0 = {V_i}` and `L_{k+1} = L_k ∪ {[V_i, K]} ∪ {[V_0, K] − ∫[Y(·,y), K] G(dy)}`
//! over `K ∈ L_k`. For mark-free `K` the bracket is bilinear and commutes
//! with integration in `y`, so the last family equals `[W, K]` with
//! `W = V_0 − Ȳ`, `Ȳ(x) = ∫ Y(x, y) G(dy)`.
//!
//! `Ȳ` and its state derivatives are kept as opaque integral atoms
//! `A_k(x) = ∫ a_k(x, y) G(dy)`. Inside hierarchy fields atom `k` appears as
//! the variable `y{k+1}`; differentiating it in `x_j` yields the atom with
//! kernel `∂a_k/∂x_j`. Every hierarchy field is therefore an exact
//! expression in `x` and finitely many single integrals.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{bracket_with, compute_v0, FieldSystem};
use crate::dsl::{Expr, Var, VectorField};
use crate::error::{Error, Result};
use crate::levy::{LevyMeasure, Region};
use crate::linalg::Matrix;
use crate::quad::QuadOptions;
use crate::rng::{purpose, stream};

pub const DEFAULT_JMAX: usize = 4;
pub const MAX_JMAX: usize = 6;

#[derive(Clone, Debug, Default)]
struct Atoms {
    kernels: Vec<Expr>,
    derivs: Vec<((usize, usize), Option<usize>)>,
}

impl Atoms {
    fn intern(&mut self, kernel: &Expr) -> Option<usize> {
        let k = kernel.simplified();
        if k.is_zero() {
            return None;
        }
        if let Some(i) = self.kernels.iter().position(|q| *q == k) {
            return Some(i);
        }
        self.kernels.push(k);
        Some(self.kernels.len() - 1)
    }

    fn derivative(&mut self, atom: usize, j: usize) -> Option<usize> {
        if let Some((_, d)) = self.derivs.iter().find(|(key, _)| *key == (atom, j)) {
            return *d;
        }
        let kernel = self.kernels[atom].diff(Var::X(j));
        let d = self.intern(&kernel);
        self.derivs.push(((atom, j), d));
        d
    }

    /// Total derivative in `x_j`, chaining through atoms.
    fn total_diff(&mut self, e: &Expr, j: usize) -> Expr {
        let mut used = Vec::new();
        e.for_each_var(&mut |v| {
            if let Var::Y(a) = v {
                if !used.contains(&a) {
                    used.push(a);
                }
            }
        });
        let mut out = e.diff(Var::X(j));
        for a in used {
            if let Some(d) = self.derivative(a, j) {
                out = Expr::sum(out, Expr::product(e.diff(Var::Y(a)), Expr::y(d)));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct HierarchyField {
    pub field: VectorField,
    /// Level at which the field first appears.
    pub level: usize,
    /// Bracket word, e.g. `[V1,W]`.
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct BracketHierarchy {
    /// Fields first appearing at each level; `L_k` is the union of `0..=k`.
    new_fields: Vec<Vec<HierarchyField>>,
    atoms: Vec<Expr>,
    atom_field: VectorField,
    measure: Option<Arc<LevyMeasure>>,
    dim: usize,
}

impl BracketHierarchy {
    pub fn jmax(&self) -> usize {
        self.new_fields.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.new_fields.len()
    }

    pub fn new_at(&self, k: usize) -> &[HierarchyField] {
        &self.new_fields[k]
    }

    /// Fields of `L_k`.
    pub fn level(&self, k: usize) -> impl Iterator<Item = &HierarchyField> {
        self.new_fields[..=k].iter().flatten()
    }

    /// Kernels `a_k(x, y1)` of the integral atoms.
    pub fn atom_kernels(&self) -> &[Expr] {
        &self.atoms
    }

    pub fn atom_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (Some(g), false) = (&self.measure, self.atoms.is_empty()) else {
            return Ok(vec![0.0; self.atoms.len()]);
        };
        let f = &self.atom_field;
        let out = g.integrate(
            Region::All,
            self.atoms.len(),
            |y, o| f.eval_into(x, &[y], 0.0, o),
            &QuadOptions::default(),
        )?;
        Ok(out.value)
    }

    /// Values of every field of `L_k` at `x`.
    pub fn eval_level(&self, k: usize, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let atoms = self.atom_values(x)?;
        self.level(k).map(|h| Ok(h.field.eval(x, &atoms, 0.0)?)).collect()
    }

    /// `Σ_{K ∈ L_k} K(x) K(x)ᵀ`.
    pub fn gram(&self, k: usize, x: &[f64]) -> Result<Matrix<f64>> {
        let mut g = Matrix::zeros(self.dim);
        for v in self.eval_level(k, x)? {
            add_outer(&mut g, &v);
        }
        Ok(g)
    }
}

fn add_outer(g: &mut Matrix<f64>, v: &[f64]) {
    for i in 0..v.len() {
        for j in 0..v.len() {
            g[(i, j)] += v[i] * v[j];
        }
    }
}

/// Builds `L_0..L_jmax` (`jmax` capped at [`MAX_JMAX`]). Zero fields and
/// fields whose canonical form repeats an earlier one are dropped.
pub fn bracket_hierarchy(system: &FieldSystem, jmax: usize) -> BracketHierarchy {
    let jmax = jmax.min(MAX_JMAX);
    let e = system.state_dim();
    let mut atoms = Atoms::default();

    let v0 = compute_v0(&system.drift, &system.diffusion);
    let corrected = if system.has_jumps() {
        let comps = v0
            .components()
            .iter()
            .zip(system.jump.components())
            .map(|(v, y)| match atoms.intern(y) {
                Some(a) => Expr::difference(v.clone(), Expr::y(a)),
                None => v.clone(),
            })
            .collect();
        VectorField::new(comps)
    } else {
        v0
    };

    let mut generators: Vec<(String, VectorField)> = system
        .diffusion
        .iter()
        .enumerate()
        .map(|(i, v)| (format!("V{}", i + 1), v.simplified()))
        .collect();
    if !corrected.is_zero() {
        generators.push(("W".to_string(), corrected));
    }

    let mut seen: Vec<VectorField> = Vec::new();
    let mut level0 = Vec::new();
    for (i, v) in system.diffusion.iter().enumerate() {
        let v = v.simplified();
        if v.is_zero() || seen.contains(&v) {
            continue;
        }
        seen.push(v.clone());
        level0.push(HierarchyField { field: v, level: 0, label: format!("V{}", i + 1) });
    }
    let mut new_fields = vec![level0];
    for k in 1..=jmax {
        let mut next = Vec::new();
        for parent in &new_fields[k - 1] {
            for (name, g) in &generators {
                let b = bracket_with(g, &parent.field, &mut |c, j| atoms.total_diff(c, j));
                if b.is_zero() || seen.contains(&b) {
                    continue;
                }
                seen.push(b.clone());
                next.push(HierarchyField { field: b, level: k, label: format!("[{name},{}]", parent.label) });
            }
        }
        new_fields.push(next);
    }

    let atom_field = VectorField::new(atoms.kernels.clone());
    BracketHierarchy {
        new_fields,
        atoms: atoms.kernels,
        atom_field,
        measure: system.measure.clone(),
        dim: e,
    }
}

#[derive(Clone, Debug)]
pub struct UhOptions {
    pub jmax: usize,
    /// Per-coordinate `(lo, hi)` of the state box.
    pub sample_box: Vec<(f64, f64)>,
    /// Uniform random points in addition to a regular grid.
    pub n_points: usize,
    /// Random unit directions per point, in addition to Gram eigenvectors.
    pub n_dirs: usize,
    /// Spanning threshold relative to the largest Gram eigenvalue.
    pub c_min: f64,
    pub seed: u64,
}

impl UhOptions {
    pub fn new(sample_box: Vec<(f64, f64)>) -> Self {
        Self { jmax: DEFAULT_JMAX, sample_box, n_points: 64, n_dirs: 16, c_min: 1e-8, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UhReport {
    pub j0: Option<usize>,
    /// Minimum over sampled points and directions at level `j0`; zero when
    /// no level spans.
    pub c_est: f64,
    /// `min_x min_u Σ_{K ∈ L_j} (uᵀK(x))²` per level.
    pub level_minima: Vec<f64>,
    /// Fields in each `L_j`.
    pub level_sizes: Vec<usize>,
    pub sample_box: Vec<(f64, f64)>,
    pub n_points: usize,
    pub n_dirs: usize,
    pub c_min: f64,
}

pub fn uh_check(system: &FieldSystem, jmax: usize, sample_box: Vec<(f64, f64)>, n_points: usize, n_dirs: usize) -> Result<UhReport> {
    let mut opts = UhOptions::new(sample_box);
    opts.jmax = jmax;
    opts.n_points = n_points;
    opts.n_dirs = n_dirs;
    uh_check_with(system, &opts)
}

pub fn uh_check_with(system: &FieldSystem, opts: &UhOptions) -> Result<UhReport> {
    let e = system.state_dim();
    if opts.n_points == 0 || opts.n_dirs == 0 {
        return Err(Error::invalid("n_points and n_dirs must be at least 1"));
    }
    if opts.sample_box.len() != e {
        return Err(Error::Dimension(format!("sample box has {} coordinates, state has {e}", opts.sample_box.len())));
    }
    if opts.sample_box.iter().any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
        return Err(Error::invalid("sample box bounds must be finite with lo <= hi"));
    }
    let h = bracket_hierarchy(system, opts.jmax);
    let levels = h.levels();

    let mut rng = stream(opts.seed, purpose::SAMPLING, 0);
    let per_axis: usize = if e <= 3 { 3 } else { 2 };
    let mut points = Vec::new();
    for idx in 0..per_axis.pow(e as u32) {
        let mut rest = idx;
        let p: Vec<f64> = opts
            .sample_box
            .iter()
            .map(|&(a, b)| {
                let k = rest % per_axis;
                rest /= per_axis;
                a + (b - a) * k as f64 / (per_axis - 1) as f64
            })
            .collect();
        points.push(p);
    }
    for _ in 0..opts.n_points {
        points.push(opts.sample_box.iter().map(|&(a, b)| a + (b - a) * rng.random::<f64>()).collect());
    }
    let mut dir_rng = stream(opts.seed, purpose::SAMPLING, 1);

    let mut minima = vec![f64::INFINITY; levels];
    let mut spans = vec![true; levels];
    for x in &points {
        let atoms = h.atom_values(x)?;
        let mut gram = Matrix::zeros(e);
        for j in 0..levels {
            for f in h.new_at(j) {
                add_outer(&mut gram, &f.field.eval(x, &atoms, 0.0)?);
            }
            let eig = gram.symmetric_eigen();
            let mut dirs: Vec<Vec<f64>> = (0..e).map(|k| eig.vector(k)).collect();
            for _ in 0..opts.n_dirs {
                let u: Vec<f64> = (0..e).map(|_| dir_rng.sample(StandardNormal)).collect();
                let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
                if n > 0.0 {
                    dirs.push(u.iter().map(|a| a / n).collect());
                }
            }
            let value = dirs
                .iter()
                .map(|u| {
                    let gu = gram.matvec(u);
                    u.iter().zip(&gu).map(|(a, b)| a * b).sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            minima[j] = minima[j].min(value);
            let top = eig.max();
            spans[j] &= top > 0.0 && value >= opts.c_min * top;
        }
    }
    let j0 = spans.iter().position(|&s| s);
    Ok(UhReport {
        j0,
        c_est: j0.map_or(0.0, |j| minima[j]),
        level_minima: minima,
        level_sizes: (0..levels).map(|j| h.level(j).count()).collect(),
        sample_box: opts.sample_box.clone(),
        n_points: points.len(),
        n_dirs: opts.n_dirs,
        c_min: opts.c_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_field;
    use crate::fields::{jump_corrected_drift_bracket, lie_bracket};

    fn f(c: &[&str]) -> VectorField {
        parse_field(c, c.len(), 1).unwrap()
    }

    fn system(z: &[&str], vs: &[&[&str]], y: Option<&[&str]>, g: Option<LevyMeasure>) -> FieldSystem {
        let e = z.len();
        let jump = y.map_or(VectorField::zero(e), f);
        FieldSystem::new("t", f(z), vs.iter().map(|v| f(v)).collect(), jump, g.map(Arc::new)).unwrap()
    }

    fn unit_box(e: usize) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0); e]
    }

    #[test]
    fn elliptic_frame_spans_at_level_zero() {
        let s = system(&["0", "0"], &[&["1", "0"], &["0", "1"]], None, None);
        let h = bracket_hierarchy(&s, 0);
        assert_eq!(h.levels(), 1);
        let r = uh_check(&s, 3, unit_box(2), 20, 8).unwrap();
        assert_eq!(r.j0, Some(0));
        assert!((r.c_est - 1.0).abs() < 1e-9);
    }

    #[test]
    fn heisenberg_spans_at_level_one() {
        let s = system(&["0", "x1"], &[&["1", "0"]], None, None);
        let h = bracket_hierarchy(&s, 2);
        assert_eq!(h.new_at(1).len(), 1);
        assert_eq!(h.new_at(1)[0].field.eval(&[5.0, -3.0], &[], 0.0).unwrap(), vec![0.0, -1.0]);
        // finite-difference oracle for [V0, V1] at a point
        let x = [0.3, 0.8];
        let fd = fd_bracket(&f(&["0", "x1"]), &f(&["1", "0"]), &x);
        let sym = h.new_at(1)[0].field.eval(&x, &[], 0.0).unwrap();
        for (a, b) in fd.iter().zip(&sym) {
            assert!((a - b).abs() < 1e-8);
        }
        let r = uh_check(&s, 4, unit_box(2), 20, 8).unwrap();
        assert_eq!(r.j0, Some(1));
        assert!(r.level_minima[0] < 1e-12);
    }

    #[test]
    fn degenerate_model_never_spans() {
        let s = system(&["0", "0"], &[&["1", "0"]], None, None);
        let r = uh_check(&s, 5, unit_box(2), 20, 8).unwrap();
        assert_eq!(r.j0, None);
        assert_eq!(r.c_est, 0.0);
        assert_eq!(r.level_minima.len(), 6);
    }

    #[test]
    fn levels_are_nested() {
        let s = system(&["sin(x2)", "x1*x3", "x1"], &[&["1", "0", "x2"], &["0", "cos(x1)", "0"]], None, None);
        let h = bracket_hierarchy(&s, 3);
        for k in 1..h.levels() {
            assert!(h.level(k).count() >= h.level(k - 1).count());
        }
    }

    fn fd_bracket(a: &VectorField, b: &VectorField, x: &[f64]) -> Vec<f64> {
        let e = x.len();
        let h = 1e-6;
        let av = a.eval(x, &[], 0.0).unwrap();
        let bv = b.eval(x, &[], 0.0).unwrap();
        let dir = |field: &VectorField, v: &[f64]| -> Vec<f64> {
            let xp: Vec<f64> = x.iter().zip(v).map(|(p, q)| p + h * q).collect();
            let xm: Vec<f64> = x.iter().zip(v).map(|(p, q)| p - h * q).collect();
            let fp = field.eval(&xp, &[], 0.0).unwrap();
            let fm = field.eval(&xm, &[], 0.0).unwrap();
            (0..e).map(|i| (fp[i] - fm[i]) / (2.0 * h)).collect()
        };
        let db_a = dir(b, &av);
        let da_b = dir(a, &bv);
        (0..e).map(|i| db_a[i] - da_b[i]).collect()
    }

    #[test]
    fn atoms_match_the_direct_jump_correction() {
        // a jump field with a non-vanishing compensator
        let g = LevyMeasure::power_law(1.5).unwrap();
        let s = system(&["x2", "-x1"], &[&["1", "x1"]], Some(&["x2*y1^2", "sin(x1)*abs(y1)"]), Some(g.clone()));
        let h = bracket_hierarchy(&s, 1);
        assert!(!h.atom_kernels().is_empty());
        let w_bracket = h.new_at(1).iter().find(|k| k.label == "[W,V1]").unwrap();
        let v0 = compute_v0(&s.drift, &s.diffusion);
        let direct = jump_corrected_drift_bracket(&v0, &s.diffusion[0], &s.jump, Some(Arc::new(g)));
        for x in [[0.2, -0.4], [1.0, 0.5], [-0.7, 0.9]] {
            let atoms = h.atom_values(&x).unwrap();
            let via_atoms = w_bracket.field.eval(&x, &atoms, 0.0).unwrap();
            let want = direct.eval(&x).unwrap();
            for (a, b) in via_atoms.iter().zip(&want) {
                assert!((a - b).abs() < 1e-7 * b.abs().max(1.0), "{a} {b}");
            }
        }
        // [V1, V1] vanishes and is pruned
        assert!(h.new_at(1).iter().all(|k| k.label != "[V1,V1]"));
        assert!(lie_bracket(&s.diffusion[0], &s.diffusion[0]).is_zero());
    }

    #[test]
    fn sign_flips_leave_the_estimate_unchanged() {
        let s = system(&["0", "x1"], &[&["1", "0"]], None, None);
        let flipped = system(&["0", "x1"], &[&["-1", "0"]], None, None);
        let a = uh_check(&s, 2, unit_box(2), 10, 4).unwrap();
        let b = uh_check(&flipped, 2, unit_box(2), 10, 4).unwrap();
        assert_eq!(a.j0, b.j0);
        assert!((a.c_est - b.c_est).abs() < 1e-12);
    }
}
