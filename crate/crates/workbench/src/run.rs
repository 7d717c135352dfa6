//! Sweep orchestration: cache lookup, parallel evaluation, emission.

use indexmap::IndexMap;
use rayon::prelude::*;
use twistbethe_core::scaling::fit;

use crate::cache::Cache;
use crate::config::{Experiment, ExperimentConfig};
use crate::emit::{emit_all, fit_plot, Emitted};
use crate::experiments::{compute, load_samples, output_names, points, Point};
use crate::record::{read_csv, ResultRecord, Status, CODE_VERSION};
use crate::WorkbenchError;

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<ResultRecord>,
    /// Points that produced an error record.
    pub failures: usize,
    /// Points served from the cache.
    pub cached: usize,
    pub files: Emitted,
}

fn fresh_record(cfg: &ExperimentConfig, p: &Point, result: Result<IndexMap<String, f64>, String>) -> ResultRecord {
    let (status, error, outputs) = match result {
        Ok(outputs) => (Status::Ok, None, outputs),
        Err(e) => (
            Status::Error,
            Some(e),
            output_names(cfg.experiment)
                .iter()
                .map(|s| (s.to_string(), f64::NAN))
                .collect(),
        ),
    };
    ResultRecord {
        experiment: cfg.experiment,
        variant: cfg
            .fit
            .as_ref()
            .filter(|_| cfg.experiment == Experiment::Fit)
            .map(|f| f.kind.to_string())
            .unwrap_or_default(),
        eta: p.eta,
        n: p.n,
        boundary: p.boundary,
        status,
        error,
        outputs,
        timestamp: cfg.resolved_timestamp(),
        code_version: CODE_VERSION.to_string(),
    }
}

/// Evaluates every point of the sweep without writing result tables.
/// Returns the records in sweep order and the number of cache hits.
pub fn compute_records(cfg: &ExperimentConfig) -> Result<(Vec<ResultRecord>, usize), WorkbenchError> {
    cfg.validate()?;
    let cache = Cache::new(cfg.output_dir.join("cache"));
    let use_cache = cfg.experiment != Experiment::Fit;
    let mut pts = points(cfg);
    if cfg.experiment == Experiment::Fit {
        for p in &mut pts {
            p.eta = fit_input_eta(cfg);
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| WorkbenchError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<(ResultRecord, bool), WorkbenchError>> = pool.install(|| {
        pts.par_iter()
            .map(|p| {
                if use_cache && !cfg.force {
                    if let Some(hit) = cache.load(cfg, p).filter(ResultRecord::is_ok) {
                        return Ok((hit, true));
                    }
                }
                let record = fresh_record(cfg, p, compute(cfg, p));
                // failures are recomputed on the next run
                if use_cache && record.is_ok() {
                    cache.store(cfg, p, &record)?;
                }
                Ok((record, false))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    let mut hits = 0;
    for r in results {
        let (record, hit) = r?;
        hits += usize::from(hit);
        records.push(record);
    }
    Ok((records, hits))
}

/// η shared by all rows of the fit input, or `NaN` when mixed.
fn fit_input_eta(cfg: &ExperimentConfig) -> f64 {
    let Some(spec) = &cfg.fit else { return f64::NAN };
    let Ok(file) = std::fs::File::open(&spec.input) else { return f64::NAN };
    let Ok(rows) = read_csv(file) else { return f64::NAN };
    match rows.first() {
        Some(r) if rows.iter().all(|s| s.eta.to_bits() == r.eta.to_bits()) => r.eta,
        _ => f64::NAN,
    }
}

/// Runs the sweep and writes `{slug}.csv`, `.json` and `.svg` into the
/// output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, WorkbenchError> {
    let (records, cached) = compute_records(cfg)?;
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    let plot = match (&cfg.fit, cfg.experiment) {
        (Some(spec), Experiment::Fit) if failures == 0 => {
            let samples = load_samples(spec).map_err(WorkbenchError::Solver)?;
            let f = fit(spec.kind, &samples).map_err(|e| WorkbenchError::Solver(e.to_string()))?;
            let label = spec.column.clone().unwrap_or_else(|| "value".into());
            Some(fit_plot(&samples, &f, &label))
        }
        _ => None,
    };
    let files = emit_all(&records, &cfg.output_dir, plot.as_ref())?;
    Ok(RunOutcome {
        records,
        failures,
        cached,
        files,
    })
}
