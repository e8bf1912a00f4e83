//! Repeated independent runs, their statistics and CSV output.
//!
//! Run `k` uses seed `base_seed + k`, so a benchmark is reproducible
//! regardless of how runs are spread over threads. The thread count comes
//! from the configuration, else from `AUTOCBLS_THREADS`, else from rayon's
//! default.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{Model, ModelError, ViolationMode};
use crate::search::{tabu_search, InitMode, SearchParams};

pub const THREADS_ENV: &str = "AUTOCBLS_THREADS";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub base_seed: u64,
    pub mode: ViolationMode,
    /// Search settings; the seed is replaced per run.
    pub params: SearchParams,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub mode: ViolationMode,
    pub init: InitMode,
    pub run: usize,
    pub seed: u64,
    pub solved: bool,
    pub iterations: u64,
    pub time_ms: f64,
    pub restarts: u64,
    pub best_violation: usize,
    #[serde(skip)]
    pub visits: u64,
    #[serde(skip)]
    pub relaxations: u64,
}

fn thread_count(cfg: &BenchConfig) -> Result<Option<usize>, ModelError> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            v.trim().parse::<usize>().map(Some).map_err(|_| {
                ModelError::Invalid(format!("{THREADS_ENV}=`{v}` is not a thread count"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Runs the search `cfg.runs` times on `model` (whose constraints are set to
/// `cfg.mode`).
pub fn run_bench(model: &Model, cfg: &BenchConfig) -> Result<Vec<RunRecord>, ModelError> {
    let model = Arc::new(model.clone().with_mode(cfg.mode));
    let one = |run: usize| -> Result<RunRecord, ModelError> {
        let seed = cfg.base_seed.wrapping_add(run as u64);
        let params = SearchParams {
            seed,
            ..cfg.params.clone()
        };
        let r = tabu_search(&model, &params)?;
        Ok(RunRecord {
            instance: model.name().to_string(),
            mode: cfg.mode,
            init: params.init,
            run,
            seed,
            solved: r.solved,
            iterations: r.iterations,
            time_ms: r.time_ms,
            restarts: r.restarts,
            best_violation: r.best_violation,
            visits: r.effort.visits,
            relaxations: r.effort.relaxations,
        })
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count(cfg)? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| ModelError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| (0..cfg.runs).into_par_iter().map(one).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let avg = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / n;
        Some(Stats {
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            avg,
            std: var.sqrt(),
        })
    }
}

/// Statistics over the solved runs; unsolved runs are only counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub solved: usize,
    pub unsolved: usize,
    pub iterations: Option<Stats>,
    pub time_ms: Option<Stats>,
}

pub fn summarize(records: &[RunRecord]) -> Summary {
    let solved: Vec<&RunRecord> = records.iter().filter(|r| r.solved).collect();
    let its: Vec<f64> = solved.iter().map(|r| r.iterations as f64).collect();
    let times: Vec<f64> = solved.iter().map(|r| r.time_ms).collect();
    Summary {
        runs: records.len(),
        solved: solved.len(),
        unsolved: records.len() - solved.len(),
        iterations: Stats::of(&its),
        time_ms: Stats::of(&times),
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "instance",
    "mode",
    "init",
    "run",
    "seed",
    "solved",
    "iterations",
    "time_ms",
    "restarts",
    "best_violation",
];

/// Writes one CSV row per run. Without `timing` the `time_ms` column is left
/// empty, which makes output from equal seeds byte-identical.
pub fn write_csv<W: Write>(out: W, records: &[RunRecord], timing: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let time = if timing {
            format!("{:.3}", r.time_ms)
        } else {
            String::new()
        };
        w.write_record([
            r.instance.clone(),
            r.mode.to_string(),
            r.init.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.solved.to_string(),
            r.iterations.to_string(),
            time,
            r.restarts.to_string(),
            r.best_violation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
