//! `jdsmooth --config experiment.json [--seed N] [--paths N] [--out DIR] [--threads N]`
//!
//! Exit codes: 0 on success, 2 when the config cannot be read or fails
//! validation, 3 when the experiment fails while running.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use jdsmooth::config::ExperimentConfig;
use jdsmooth::experiment::run_experiment;
use jdsmooth::Error;
use serde_json::json;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("JDSMOOTH_GIT_DESCRIBE"), ")");

#[derive(Parser, Debug)]
#[command(name = "jdsmooth", version = VERSION, about = "Jump-diffusion simulation and verification experiments")]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Path or replication count, overriding the config.
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Validation(Error),
    Runtime(Error),
}

fn prepare(args: &Args) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(Failure::Validation)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = args.paths {
        match cfg.experiment.n_paths_mut() {
            Some(slot) => *slot = n,
            None => {
                return Err(Failure::Validation(Error::config(
                    "/experiment",
                    format!("--paths does not apply to {}", cfg.experiment.kind()),
                )))
            }
        }
    }
    cfg.validate().map_err(Failure::Validation)?;
    Ok(cfg.resolved())
}

fn execute(cfg: &ExperimentConfig, threads: usize) -> Result<(), Failure> {
    let start = Instant::now();
    let output = run_experiment(cfg).map_err(Failure::Runtime)?;
    output.write(&cfg.output_dir).map_err(Failure::Runtime)?;
    let manifest = json!({
        "version": VERSION,
        "seed": cfg.seed,
        "threads": threads,
        "experiment": cfg.experiment.kind(),
        "outputs": output.tables.iter().map(|(n, _)| n.as_str()).chain(["summary.json"]).collect::<Vec<_>>(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "config": cfg,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(Error::invalid(e.to_string())))?;
    std::fs::write(cfg.output_dir.join("manifest.json"), text + "\n").map_err(|e| Failure::Runtime(e.into()))?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let threads = args.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start the worker pool: {e}");
        return ExitCode::from(3);
    }
    let result = prepare(&args).and_then(|cfg| execute(&cfg, threads));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
