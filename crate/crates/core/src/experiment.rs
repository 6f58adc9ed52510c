//! Runs a resolved [`ExperimentConfig`] and collects its outputs.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentSpec};
use crate::density::{kde, l1_distance_to_normal, ou_moments, smoothness_proxy, GridSpec};
use crate::engine::{simulate_endpoints, Mode, Simulator};
use crate::error::{Error, Result};
use crate::fields::{uh_check_with, UhOptions};
use crate::inequalities::{
    emi_experiment, empirical_cdf, longest_interval_cdf, longest_interval_samples, norris_experiment, EmiInstance,
};
use crate::levy::{check_conditions_with, ConditionOptions};
use crate::malliavin::{covariance_samples, moment_from_samples, tail_from_samples};
use crate::report::{estimate_cells, Cell, CsvTable};
use crate::stats::{dkw_epsilon, try_par_map};

/// A JSON summary plus named CSV tables.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: Value,
    pub tables: Vec<(String, CsvTable)>,
}

impl ExperimentOutput {
    /// Writes `summary.json` and every table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let summary = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(dir.join("summary.json"), summary + "\n")?;
        for (name, table) in &self.tables {
            table.write(&dir.join(name))?;
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn state_header(prefix: &[&str], e: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=e).map(|i| format!("x{i}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

/// Validates and runs the experiment. `cfg.seed` is the master seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let system = cfg.build_system()?;
    let x0 = cfg.initial_state(&system)?;
    let sim = &cfg.sim;
    let seed = cfg.seed;
    let e = system.state_dim();

    match &cfg.experiment {
        ExperimentSpec::Simulate { n_paths, truncated } => {
            let mut run = sim.clone();
            run.record_jacobians = false;
            let simulator = Simulator::new(&system, &run)?;
            let mode = if *truncated { Mode::Truncated } else { Mode::Full };
            let paths = try_par_map(*n_paths, |i| simulator.path(&x0, i, mode))?;
            let mut table = CsvTable::new(state_header(&["path", "t"], e, &[]));
            let mut jumps = 0;
            let mut suppressed = 0;
            for (i, p) in paths.iter().enumerate() {
                jumps += p.jumps.len();
                suppressed += p.suppressed_jumps;
                for (t, x) in p.grid.iter().zip(&p.x) {
                    let mut row = vec![Cell::from(i), Cell::from(*t)];
                    row.extend(x.iter().map(|&v| Cell::from(v)));
                    table.push(row);
                }
            }
            let endpoints: Vec<Vec<f64>> = paths.iter().map(|p| p.endpoint().to_vec()).collect();
            let summary = json!({
                "experiment": "simulate",
                "n_paths": n_paths,
                "applied_jumps": jumps,
                "suppressed_jumps": suppressed,
                "endpoint_mean": (0..e).map(|k| crate::stats::mean(&endpoints.iter().map(|x| x[k]).collect::<Vec<_>>())).collect::<Vec<_>>(),
            });
            Ok(ExperimentOutput { summary, tables: vec![("paths.csv".into(), table)] })
        }
        ExperimentSpec::UhCheck { jmax, sample_box, n_points, n_dirs, c_min } => {
            let mut opts = UhOptions::new(sample_box.clone());
            opts.jmax = *jmax;
            opts.n_points = *n_points;
            opts.n_dirs = *n_dirs;
            opts.c_min = *c_min;
            opts.seed = seed;
            let report = uh_check_with(&system, &opts)?;
            let mut table = CsvTable::new(["level", "fields", "min_spanning_value"]);
            for (k, (size, min)) in report.level_sizes.iter().zip(&report.level_minima).enumerate() {
                table.push(vec![k.into(), (*size).into(), (*min).into()]);
            }
            Ok(ExperimentOutput {
                summary: json!({ "experiment": "uh-check", "report": to_value(&report) }),
                tables: vec![("uh_levels.csv".into(), table)],
            })
        }
        ExperimentSpec::CovTail { n_paths, eps_grid, direction } => {
            let samples = covariance_samples(&system, &x0, sim, *n_paths, direction.as_deref())?;
            let tail = tail_from_samples(&samples, eps_grid, seed)?;
            let mut table = CsvTable::new(["eps", "probability", "se"]);
            for (eps, p) in tail.eps_grid.iter().zip(&tail.probs) {
                let [m, s] = estimate_cells(p);
                table.push(vec![(*eps).into(), m, s]);
            }
            let mut sorted = samples.clone();
            sorted.sort_by(f64::total_cmp);
            let mut lambda = CsvTable::new(["path", "lambda_min"]);
            for (i, v) in samples.iter().enumerate() {
                lambda.push(vec![i.into(), (*v).into()]);
            }
            Ok(ExperimentOutput {
                summary: json!({
                    "experiment": "cov-tail",
                    "n_paths": n_paths,
                    "fitted_slope": tail.fitted_slope,
                    "monotone_within_2se": tail.monotone_within(2.0),
                    "median_lambda": sorted[sorted.len() / 2],
                }),
                tables: vec![("cov_tail.csv".into(), table), ("lambda.csv".into(), lambda)],
            })
        }
        ExperimentSpec::InverseMoment { n_paths, p, floor } => {
            let samples = covariance_samples(&system, &x0, sim, *n_paths, None)?;
            let est = moment_from_samples(&samples, *p, *floor, seed)?;
            let mut table = CsvTable::new(["p", "floor", "mean", "se"]);
            let [m, s] = estimate_cells(&est);
            table.push(vec![(*p).into(), (*floor).into(), m, s]);
            Ok(ExperimentOutput {
                summary: json!({ "experiment": "inverse-moment", "estimate": to_value(&est) }),
                tables: vec![("inverse_moment.csv".into(), table)],
            })
        }
        ExperimentSpec::Emi { integrand, scale_with_bound, cells, n_paths } => {
            let measure = cfg.build_measure()?.ok_or_else(|| Error::config("/measure", "emi needs a jump measure"))?;
            let mut table = CsvTable::new(["jump_bound", "delta", "rho", "empirical", "se", "bound"]);
            let mut all_hold = true;
            for cell in cells {
                let text = if *scale_with_bound { format!("{:?}*({integrand})", cell.jump_bound) } else { integrand.clone() };
                let inst = EmiInstance::new(&text, Arc::clone(&measure), cell.jump_bound, cell.delta, cell.rho, sim.horizon, 0.0)?;
                let r = emi_experiment(&inst, *n_paths, seed)?;
                all_hold &= r.empirical.mean <= r.bound + 3.0 * r.empirical.se;
                let [m, s] = estimate_cells(&r.empirical);
                table.push(vec![cell.jump_bound.into(), cell.delta.into(), cell.rho.into(), m, s, r.bound.into()]);
            }
            Ok(ExperimentOutput {
                summary: json!({ "experiment": "emi", "n_paths": n_paths, "bound_holds_within_3se": all_hold }),
                tables: vec![("emi.csv".into(), table)],
            })
        }
        ExperimentSpec::Norris { instance, eps_grid, n_paths } => {
            let inst = instance.build(cfg.build_measure()?, sim)?;
            let rows = norris_experiment(&inst, eps_grid, *n_paths, seed)?;
            let mut table = CsvTable::new(["eps", "window", "empirical", "se", "bound"]);
            for r in &rows {
                let [m, s] = estimate_cells(&r.lhs_prob);
                table.push(vec![r.eps.into(), r.window.into(), m, s, Cell::Empty]);
            }
            Ok(ExperimentOutput {
                summary: json!({ "experiment": "norris", "z": inst.z(), "rows": to_value(&rows) }),
                tables: vec![("norris.csv".into(), table)],
            })
        }
        ExperimentSpec::Density { n_paths, grid, points, bandwidth } => {
            let samples = simulate_endpoints(&system, &x0, sim, *n_paths)?;
            let grid = match grid {
                Some(g) => g.clone(),
                None => GridSpec::covering(&samples, 6.0, *points)?,
            };
            let est = kde(&samples, &grid, bandwidth.as_deref())?;
            let mut table = CsvTable::new(state_header(&[], e, &["density"]));
            for (i, v) in est.values.iter().enumerate() {
                let mut row: Vec<Cell> = est.point(i).into_iter().map(Cell::from).collect();
                row.push((*v).into());
                table.push(row);
            }
            let baseline = match &cfg.model {
                crate::config::ModelSpec::LinearAdditive { a, sigma } => {
                    let (m, v) = ou_moments(*a, *sigma, x0[0], sim.horizon);
                    Some(json!({ "mean": m, "variance": v, "l1_error": l1_distance_to_normal(&est, m, v)? }))
                }
                _ => None,
            };
            Ok(ExperimentOutput {
                summary: json!({
                    "experiment": "density",
                    "n_samples": est.n_samples,
                    "bandwidth": est.bandwidth,
                    "integral": est.integral(),
                    "smoothness_order1": smoothness_proxy(&est, 1).ok(),
                    "smoothness_order2": smoothness_proxy(&est, 2).ok(),
                    "gaussian_baseline": baseline,
                }),
                tables: vec![("density.csv".into(), table)],
            })
        }
        ExperimentSpec::VerifyMeasure { alpha, sample_box, n_points } => {
            let g = match (&cfg.measure, &system.measure) {
                (Some(_), _) => cfg.build_measure()?.expect("measure present"),
                (None, Some(g)) => Arc::clone(g),
                (None, None) => return Err(Error::config("/measure", "verify-measure needs a jump measure")),
            };
            let mut opts = ConditionOptions::new(*alpha, sample_box.clone());
            opts.n_points = *n_points;
            opts.seed = seed;
            let report = check_conditions_with(&g, &system.jump, &opts)?;
            let tail = g.tail_mass(sim.cut)?;
            let mut table = CsvTable::new(["eps", "tail_mass"]);
            for &eps in &report.eps_grid {
                table.push(vec![eps.into(), g.tail_mass(eps)?.into()]);
            }
            Ok(ExperimentOutput {
                summary: json!({
                    "experiment": "verify-measure",
                    "measure": g.name(),
                    "kappa": g.kappa(),
                    "cut": sim.cut,
                    "tail_mass": tail,
                    "tail_mass_closed_form": g.tail_mass_closed_form(sim.cut),
                    "conditions": to_value(&report),
                }),
                tables: vec![("tail_mass.csv".into(), table)],
            })
        }
        ExperimentSpec::IntervalCdf { m, t0, points, replications } => {
            let samples = longest_interval_samples(*m, *t0, *replications, seed);
            let band = dkw_epsilon(*replications, 0.01);
            let mut table = CsvTable::new(["x", "printed", "standard", "empirical"]);
            let (mut standard_dev, mut printed_dev) = (0.0f64, 0.0f64);
            for k in 1..=*points {
                let x = t0 * k as f64 / (*points + 1) as f64;
                let c = longest_interval_cdf(*m, *t0, x)?;
                let emp = empirical_cdf(&samples, x);
                standard_dev = standard_dev.max((c.standard - emp).abs());
                printed_dev = printed_dev.max((c.printed - emp).abs());
                table.push(vec![x.into(), c.printed.into(), c.standard.into(), emp.into()]);
            }
            Ok(ExperimentOutput {
                summary: json!({
                    "experiment": "interval-cdf",
                    "dkw_band_99": band,
                    "standard_max_deviation": standard_dev,
                    "printed_max_deviation": printed_dev,
                    "standard_within_band": standard_dev <= band,
                    "printed_within_band": printed_dev <= band,
                }),
                tables: vec![("interval_cdf.csv".into(), table)],
            })
        }
    }
}
