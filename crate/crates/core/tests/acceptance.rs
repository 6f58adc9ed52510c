//! Acceptance suite: one PASS/FAIL line per criterion, all tolerances below.
//!
//! Run with `cargo test -p jdsmooth --test acceptance`. The process exits
//! non-zero if any criterion outside `KNOWN_FAILURES` fails.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use jdsmooth::config::ExperimentConfig;
use jdsmooth::engine::{jacobian_inverse_residual, simulate_path, SimConfig};
use jdsmooth::experiment::{run_experiment, ExperimentOutput};
use jdsmooth::fields::{bracket_condition_check, lie_bracket, uh_check};
use jdsmooth::levy::{check_conditions, LevyMeasure};
use jdsmooth::malliavin::{covariance_samples, tail_probability};
use jdsmooth::models;
use jdsmooth::report::Cell;
use jdsmooth::stats::{dkw_epsilon, par_map};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// criterion 1
const RESIDUAL_DT: f64 = 1e-4;
const RESIDUAL_MAX: f64 = 1e-2;
const RESIDUAL_RATIO_MIN: f64 = 1.5;
const RESIDUAL_PATHS: usize = 100;
// criterion 2
const COV_EXACT: f64 = 0.432332;
const COV_REL_TOL: f64 = 1e-2;
const COV_SPREAD_MAX: f64 = 1e-6;
// criterion 3
const EMI_SE_MULTIPLIER: f64 = 3.0;
const EMI_CELLS: usize = 12;
// criterion 4
const NORRIS_SE_MULTIPLIER: f64 = 2.0;
const NORRIS_MAX_AT_SMALLEST: f64 = 0.05;
// criterion 5
const FRAME_C_TOL: f64 = 1e-9;
// criterion 6
const UNIT_LHS_TOL: f64 = 1e-15;
// criterion 7
const TAIL_SE_MULTIPLIER: f64 = 2.0;
const TAIL_MIN_SLOPE: f64 = 0.5;
// criterion 8
const BRACKET_PAIRS: usize = 50;
const BRACKET_POINTS: usize = 10;
const BRACKET_FD_STEP: f64 = 1e-5;
const BRACKET_REL_TOL: f64 = 1e-5;
// criterion 9
const TAIL_MASS_EXACT: f64 = 36.0;
const TAIL_MASS_REL_TOL: f64 = 1e-6;
// criterion 10
const DKW_ALPHA: f64 = 0.01;
// criterion 11
const L1_MAX: f64 = 0.03;
const L1_PINNED: f64 = 8.175_720_960_024_904e-3;
const L1_PIN_REL_TOL: f64 = 1e-6;
// criterion 12
const DETERMINISM_PATHS: usize = 2000;
const THREAD_COUNTS: [usize; 2] = [1, 4];

/// Criteria whose failure is analysed and expected; they still print FAIL.
const KNOWN_FAILURES: [usize; 1] = [7];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

type Outcome = Result<Verdict, String>;
type Check = fn() -> Outcome;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig::load(&configs_dir().join(name)).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg.resolved())
}

fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput, String> {
    run_experiment(cfg).map_err(|e| e.to_string())
}

/// Numeric columns of a table, `NaN` for empty or text cells.
fn numeric_rows(out: &ExperimentOutput, name: &str) -> Result<Vec<Vec<f64>>, String> {
    let table = out.table(name).ok_or_else(|| format!("missing table {name}"))?;
    Ok(table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| match c {
                    Cell::Float(v) => *v,
                    Cell::Int(v) => *v as f64,
                    _ => f64::NAN,
                })
                .collect()
        })
        .collect())
}

fn jacobian_identity() -> Outcome {
    let system = models::linear_multiplicative(0.5, 0.5).map_err(|e| e.to_string())?;
    let mean_residual = |dt: f64| -> Result<f64, String> {
        let cfg = SimConfig { dt, seed: 101, ..SimConfig::default() };
        let r: Vec<Result<f64, String>> = par_map(RESIDUAL_PATHS, |i| {
            let p = simulate_path(&system, &[1.0], &cfg, i).map_err(|e| e.to_string())?;
            jacobian_inverse_residual(&p).map_err(|e| e.to_string())
        });
        let r: Vec<f64> = r.into_iter().collect::<Result<_, _>>()?;
        Ok(r.iter().sum::<f64>() / r.len() as f64)
    };
    let coarse = mean_residual(RESIDUAL_DT)?;
    let fine = mean_residual(RESIDUAL_DT / 4.0)?;
    let ratio = coarse / fine;
    Ok(verdict(
        coarse < RESIDUAL_MAX && ratio >= RESIDUAL_RATIO_MIN,
        format!("residual {coarse:.3e} at dt={RESIDUAL_DT:e}, {fine:.3e} at dt/4, ratio {ratio:.3}"),
    ))
}

fn covariance_closed_form() -> Outcome {
    let system = models::linear_additive(1.0, 1.0).map_err(|e| e.to_string())?;
    let cfg = SimConfig { dt: 1e-3, seed: 102, ..SimConfig::default() };
    let c = covariance_samples(&system, &[0.3], &cfg, 200, None).map_err(|e| e.to_string())?;
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let rel = (mean - COV_EXACT).abs() / COV_EXACT;
    let spread = (hi - lo) / mean;
    Ok(verdict(
        rel <= COV_REL_TOL && spread <= COV_SPREAD_MAX,
        format!("C_T = {mean:.6}, relative error {rel:.2e}, path spread {spread:.1e}"),
    ))
}

fn emi_grid() -> Outcome {
    let out = run(&shipped("emi.json")?)?;
    let rows = numeric_rows(&out, "emi.csv")?;
    if rows.len() != EMI_CELLS {
        return Err(format!("expected {EMI_CELLS} cells, got {}", rows.len()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut nontrivial = 0;
    for r in &rows {
        let (empirical, se, bound) = (r[3], r[4], r[5]);
        worst = worst.max(empirical - (bound + EMI_SE_MULTIPLIER * se));
        nontrivial += usize::from(empirical > 0.0);
    }
    Ok(verdict(
        worst <= 0.0,
        format!("{EMI_CELLS} cells, {nontrivial} with hits, max(empirical - bound - 3 SE) = {worst:.3e}"),
    ))
}

fn norris_decay() -> Outcome {
    let out = run(&shipped("norris.json")?)?;
    let rows = numeric_rows(&out, "norris.csv")?;
    let monotone = rows.windows(2).all(|w| {
        let (big, small) = (&w[0], &w[1]);
        small[2] <= big[2] + NORRIS_SE_MULTIPLIER * (big[3].powi(2) + small[3].powi(2)).sqrt()
    });
    let last = rows.last().ok_or("no rows")?;
    let probs: Vec<String> = rows.iter().map(|r| format!("{}:{:.4}", r[0], r[2])).collect();
    Ok(verdict(
        monotone && last[0] == 0.1 && last[2] <= NORRIS_MAX_AT_SMALLEST,
        format!("eps:prob {}", probs.join(" ")),
    ))
}

fn uh_checker() -> Outcome {
    let e = |x: jdsmooth::Error| x.to_string();
    let frame = uh_check(&models::orthonormal_frame(3).map_err(e)?, 5, vec![(-1.0, 1.0); 3], 64, 16).map_err(e)?;
    let heis = uh_check(&models::heisenberg().map_err(e)?, 5, vec![(-1.0, 1.0); 2], 64, 16).map_err(e)?;
    let degen = uh_check(&models::degenerate().map_err(e)?, 5, vec![(-1.0, 1.0); 2], 64, 16).map_err(e)?;
    Ok(verdict(
        frame.j0 == Some(0) && (frame.c_est - 1.0).abs() <= FRAME_C_TOL && heis.j0 == Some(1) && degen.j0.is_none(),
        format!(
            "frame j0={:?} c={:.12}, heisenberg j0={:?}, degenerate j0={:?}",
            frame.j0, frame.c_est, heis.j0, degen.j0
        ),
    ))
}

fn bracket_criterion() -> Outcome {
    let e = |x: jdsmooth::Error| x.to_string();
    let mut all_true = true;
    for j0 in 0..10 {
        for n in [1usize, 2, 3] {
            all_true &= bracket_condition_check(j0, n as f64, n, 0.5, 0.1, 0.1).map_err(e)?.holds;
        }
    }
    let c = bracket_condition_check(1, 1.5, 1, 0.5, 0.1, 0.1).map_err(e)?;
    Ok(verdict(
        all_true && !c.holds && (c.lhs - 1.0).abs() <= UNIT_LHS_TOL,
        format!("kappa=n all true: {all_true}; excess 0.5 case holds={} lhs={} rhs={:.4}", c.holds, c.lhs, c.rhs),
    ))
}

fn geometric_grid(hi: f64, lo: f64, points: usize) -> Vec<f64> {
    let ratio = (lo / hi).powf(1.0 / (points - 1) as f64);
    (0..points).map(|k| hi * ratio.powi(k as i32)).collect()
}

fn hypoelliptic_tail() -> Outcome {
    let e = |x: jdsmooth::Error| x.to_string();
    let cfg = SimConfig { dt: 1e-3, seed: 107, ..SimConfig::default() };
    let eps = geometric_grid(1e-1, 1e-4, 7);
    let tail = tail_probability(&models::heisenberg().map_err(e)?, &[0.0, 0.0], &cfg, &eps, 10_000, None).map_err(e)?;
    let positive = tail.probs.iter().all(|p| p.mean > 0.0);
    let monotone = tail.monotone_within(TAIL_SE_MULTIPLIER);
    let slope_ok = tail.fitted_slope.is_some_and(|s| s > TAIL_MIN_SLOPE);
    let lambda = covariance_samples(&models::heisenberg().map_err(e)?, &[0.0, 0.0], &cfg, 1, None).map_err(e)?[0];
    let probs: Vec<String> = tail.probs.iter().map(|p| format!("{:.3}", p.mean)).collect();

    // same property on the two-noise group model, where Λ is random
    let group_cfg = SimConfig { dt: 1e-2, ..cfg.clone() };
    let group_eps = [0.2, 0.15, 0.1, 0.08, 0.06];
    let group = tail_probability(&models::heisenberg_group().map_err(e)?, &[0.0; 3], &group_cfg, &group_eps, 10_000, None)
        .map_err(e)?;
    let group_probs: Vec<String> = group.probs.iter().map(|p| format!("{:.4}", p.mean)).collect();
    Ok(verdict(
        positive && monotone && slope_ok,
        format!(
            "heisenberg: Λ = {lambda:.5} on every path, P = [{}], slope {:?}; heisenberg_group (info): P = [{}], monotone {}, slope {:?}",
            probs.join(", "),
            tail.fitted_slope,
            group_probs.join(", "),
            group.monotone_within(TAIL_SE_MULTIPLIER),
            group.fitted_slope.map(|s| (s * 1e3).round() / 1e3),
        ),
    ))
}

fn bracket_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst: f64 = 0.0;
    for k in 0..BRACKET_PAIRS {
        let e = 1 + k % 3;
        let a = common::random_polynomial_field(&mut rng, e);
        let b = common::random_polynomial_field(&mut rng, e);
        let ab = lie_bracket(&a, &b);
        for _ in 0..BRACKET_POINTS {
            let x = common::random_point(&mut rng, e);
            let symbolic = ab.eval(&x, &[], 0.0).map_err(|e| e.to_string())?;
            let fd = common::fd_bracket(&a, &b, &x, BRACKET_FD_STEP);
            worst = worst.max(common::relative_error(&symbolic, &fd));
        }
    }
    Ok(verdict(worst <= BRACKET_REL_TOL, format!("max relative error {worst:.2e} over {} points", BRACKET_PAIRS * BRACKET_POINTS)))
}

fn levy_toolkit() -> Outcome {
    let e = |x: jdsmooth::Error| x.to_string();
    let mass = LevyMeasure::power_law(1.5).map_err(e)?.tail_mass(0.01).map_err(e)?;
    let rel = (mass - TAIL_MASS_EXACT).abs() / TAIL_MASS_EXACT;
    let report = |kappa: f64| -> Result<_, String> {
        let m = models::paper_example(kappa, &models::DEFAULT_JUMP_PROFILE).map_err(e)?;
        let g = m.measure.as_ref().ok_or("paper_example has no measure")?;
        check_conditions(g, &m.jump, 0.25, vec![(-2.0, 2.0); 2]).map_err(e)
    };
    let (inside, outside) = (report(1.5)?.verdicts, report(2.5)?.verdicts);
    Ok(verdict(
        rel <= TAIL_MASS_REL_TOL && inside.all() && !outside.cond1,
        format!("tail_mass(0.01) = {mass:.9} (rel {rel:.1e}); kappa=1.5 {inside:?}; kappa=2.5 {outside:?}"),
    ))
}

fn interval_cdf() -> Outcome {
    let cfg = shipped("interval_cdf.json")?;
    let out = run(&cfg)?;
    let rows = numeric_rows(&out, "interval_cdf.csv")?;
    let n = cfg.clone().experiment.n_paths_mut().map(|n| *n).ok_or("no replication count")?;
    let band = dkw_epsilon(n, DKW_ALPHA);
    let dev = |col: usize| rows.iter().map(|r| (r[col] - r[3]).abs()).fold(0.0, f64::max);
    let (standard, printed) = (dev(2), dev(1));
    Ok(verdict(
        rows.len() == 20 && standard <= band,
        format!(
            "band {band:.5}, standard max deviation {standard:.5}; printed formula (info) max deviation {printed:.4}, {}",
            if printed <= band { "within band" } else { "outside band" }
        ),
    ))
}

fn density_baseline() -> Outcome {
    let out = run(&shipped("density.json")?)?;
    let l1 = out.summary["gaussian_baseline"]["l1_error"].as_f64().ok_or("no l1_error in summary")?;
    let pinned = (l1 - L1_PINNED).abs() <= L1_PIN_REL_TOL * L1_PINNED;
    Ok(verdict(l1 <= L1_MAX && pinned, format!("l1_error {l1:.17e} (pinned {L1_PINNED:e})")))
}

fn determinism() -> Outcome {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut compared = 0;
    for path in &entries {
        let mut cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?.resolved();
        if let Some(n) = cfg.experiment.n_paths_mut() {
            *n = (*n).min(DETERMINISM_PATHS);
        }
        let outputs: Vec<Vec<(String, String)>> = THREAD_COUNTS
            .iter()
            .map(|&threads| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
                let out = pool.install(|| run(&cfg))?;
                let mut files: Vec<(String, String)> = out.tables.iter().map(|(n, t)| (n.clone(), t.to_csv())).collect();
                files.push(("summary.json".into(), out.summary.to_string()));
                Ok(files)
            })
            .collect::<Result<_, String>>()?;
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Ok(verdict(false, format!("{} differs across thread counts", path.display())));
        }
        compared += outputs[0].len();
    }
    Ok(verdict(true, format!("{} configs, {compared} files identical for threads {THREAD_COUNTS:?}", entries.len())))
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("jacobian inverse identity", jacobian_identity),
        ("covariance closed form", covariance_closed_form),
        ("exponential martingale inequality", emi_grid),
        ("small-integral event decay", norris_decay),
        ("uniform hoermander checker", uh_checker),
        ("bracket criterion", bracket_criterion),
        ("hypoelliptic covariance tail", hypoelliptic_tail),
        ("bracket finite-difference oracle", bracket_oracle),
        ("levy measure toolkit", levy_toolkit),
        ("longest interval cdf", interval_cdf),
        ("density gaussian baseline", density_baseline),
        ("determinism across thread counts", determinism),
    ];
    let mut unexpected = vec![];
    for (k, (name, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => (v.pass, v.detail),
            Err(msg) => (false, format!("error: {msg}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let known = !pass && KNOWN_FAILURES.contains(&id);
        println!(
            "{} [{id:>2}] {name}: {detail} ({secs:.1}s){}",
            if pass { "PASS" } else { "FAIL" },
            if known { " [known failure]" } else { "" }
        );
        if !pass && !known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
