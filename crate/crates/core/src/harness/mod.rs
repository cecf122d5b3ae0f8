//! Repeated-run experiments: configuration, execution, statistics,
//! persistence and comparison reports.

mod config;
pub mod io;
mod report;
mod stats;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{AcquisitionOverrides, CustomFom, ExperimentConfig, FomTerm, Variant};
pub use report::{compare_report, ComparisonReport, PairRatio, ReportRow};
pub use stats::SummaryStats;

use crate::error::Result;
use crate::scheduler::{run, RunRecord};
use crate::seeds::repeat_seed;

/// Outcome of one repeat as listed in the summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub seed: u64,
    pub final_value: Option<f64>,
    pub total_sim_time: Option<f64>,
    pub error: Option<String>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    /// The configuration that produced the runs, without the output path.
    pub config: ExperimentConfig,
    pub label: String,
    /// Over the successful runs; `None` when every run failed.
    pub stats: Option<SummaryStats>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.error.is_some()).count()
    }
}

/// A finished experiment: its summary and the successful run records in
/// repeat order.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub summary: ExperimentSummary,
    pub records: Vec<RunRecord>,
}

/// Summary statistics of a set of run records.
pub fn summarize(records: &[RunRecord]) -> Result<SummaryStats> {
    let finals: Vec<f64> = records
        .iter()
        .map(|r| r.best_value().unwrap_or(f64::NEG_INFINITY))
        .collect();
    let times: Vec<f64> = records.iter().map(|r| r.total_sim_time).collect();
    SummaryStats::from_runs(&finals, &times)
}

/// Runs `cfg.repeats` independent repeats (concurrently when threads are
/// available) and writes the artifacts when `cfg.out` is set. A failed
/// repeat is recorded in the summary rather than aborting the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let run_cfg = cfg.run_config();

    let outcomes: Vec<(u64, Result<RunRecord>)> = (0..cfg.repeats)
        .into_par_iter()
        .map(|i| {
            let seed = repeat_seed(cfg.base_seed, i as u64);
            (seed, run(&problem, &run_cfg, cfg.regime, seed))
        })
        .collect();

    let mut runs = Vec::with_capacity(outcomes.len());
    let mut records = Vec::with_capacity(outcomes.len());
    for (index, (seed, outcome)) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(rec) => {
                if let Some(dir) = &cfg.out {
                    io::write_run(&io::run_path(dir, index), &rec)?;
                    io::write_curve(&io::curve_path(dir, index), &rec)?;
                }
                runs.push(RunSummary {
                    index,
                    seed,
                    final_value: rec.best_value(),
                    total_sim_time: Some(rec.total_sim_time),
                    error: None,
                });
                records.push(rec);
            }
            Err(e) => runs.push(RunSummary {
                index,
                seed,
                final_value: None,
                total_sim_time: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let stats = if records.is_empty() {
        None
    } else {
        Some(summarize(&records)?)
    };
    let summary = ExperimentSummary {
        config: ExperimentConfig {
            out: None,
            ..cfg.clone()
        },
        label: cfg.label(),
        stats,
        runs,
    };
    if let Some(dir) = &cfg.out {
        io::write_summary(dir, &summary)?;
    }
    Ok(Experiment { summary, records })
}

/// Loads an experiment directory written by [`run_experiment`].
pub fn load_experiment(dir: &Path) -> Result<Experiment> {
    let summary = io::read_summary(dir)?;
    let records = io::read_runs(dir, &summary.runs)?;
    Ok(Experiment { summary, records })
}
