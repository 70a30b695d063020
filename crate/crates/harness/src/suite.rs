//! Running single experiments and whole suites.

use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{ConfigFile, ExperimentConfig, Settings, Suite};
use crate::error::{HarnessError, Result};
use crate::experiments::{catalog, PlotData};
use crate::report::{ReportRecord, SuiteReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock times (reports are then no longer byte-reproducible).
    pub timing: bool,
    /// Keep the histogram data for plotting.
    pub plots: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub record: ReportRecord,
    pub plot: Option<PlotData>,
}

/// Runs one experiment. Errors inside the experiment are returned as such;
/// [`run_suite`] turns them into failed records.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunResult> {
    cfg.validate()?;
    let exp = cfg.experiment()?;
    let start = Instant::now();
    let outcome = (exp.run)(&cfg.ctx())?;
    let runtime_ms = if opts.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(RunResult {
        record: ReportRecord::from_report(&outcome.report, cfg, exp.adjudication, runtime_ms),
        plot: if opts.plots { outcome.plot } else { None },
    })
}

fn run_or_fail(cfg: &ExperimentConfig, opts: RunOptions) -> RunResult {
    match run_experiment(cfg, opts) {
        Ok(r) => r,
        Err(e) => RunResult {
            record: ReportRecord::failure(
                cfg,
                cfg.experiment().map(|x| x.adjudication).unwrap_or(false),
                &e.to_string(),
            ),
            plot: None,
        },
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub file: Option<ConfigFile>,
    /// Restrict to these experiments (all when `None`).
    pub only: Option<Vec<String>>,
    pub run: RunOptions,
}

/// Runs the catalog at the given suite budgets. Results are ordered by catalog position
/// regardless of the number of worker threads.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<(SuiteReport, Vec<Option<PlotData>>)> {
    if let Some(only) = &opts.only {
        if let Some(bad) = only.iter().find(|n| crate::experiments::find(n).is_none()) {
            return Err(HarnessError::UnknownExperiment(bad.clone()));
        }
    }
    let cli = Settings { seed: opts.seed, ..Settings::default() };
    let configs: Vec<ExperimentConfig> = catalog()
        .iter()
        .filter(|e| opts.only.as_ref().is_none_or(|o| o.iter().any(|n| n == e.name)))
        .map(|e| ExperimentConfig::resolve(e.name, suite, opts.file.as_ref(), &cli))
        .collect::<Result<_>>()?;
    let start = Instant::now();
    let go = || configs.par_iter().map(|c| run_or_fail(c, opts.run)).collect::<Vec<_>>();
    let results = match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| HarnessError::Config(e.to_string()))?
            .install(go),
        None => go(),
    };
    let wall = if opts.run.timing { start.elapsed().as_millis() as u64 } else { 0 };
    let seed = opts.seed.or(opts.file.as_ref().and_then(|f| f.defaults.seed)).unwrap_or(crate::config::DEFAULT_SEED);
    let echo = json!({
        "suite": suite.to_string(),
        "file": opts.file,
        "only": opts.only,
        "experiments": configs,
    });
    let (records, plots): (Vec<_>, Vec<_>) = results.into_iter().map(|r| (r.record, r.plot)).unzip();
    Ok((SuiteReport::new(&suite.to_string(), seed, echo, records, wall), plots))
}
