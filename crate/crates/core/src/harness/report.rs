use std::fmt;

use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::error::{Error, Result};
use crate::scheduler::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub runs: usize,
    pub mean_final: f64,
    pub mean_time: f64,
}

/// Time of `a` relative to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    pub a: String,
    pub b: String,
    /// `mean_time(a) / mean_time(b)` for the full budget.
    pub time_ratio: f64,
    /// `1 - time_ratio`: the fraction of `b`'s time that `a` saves.
    pub time_reduction: f64,
    /// The lower of the two (lower) median final values.
    pub matched_target: f64,
    /// Ratio of median times to first reach `matched_target`; `None` only
    /// when a side has no finite time.
    pub matched_time_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub problem: String,
    pub budget: usize,
    pub rows: Vec<ReportRow>,
    pub pairs: Vec<PairRatio>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Lower median of the final values, so that more than half of the runs
/// reach it.
fn median_final(records: &[RunRecord]) -> f64 {
    let mut v: Vec<f64> = records
        .iter()
        .map(|r| r.best_value().unwrap_or(f64::NEG_INFINITY))
        .collect();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Median time at which runs reach `target`; runs that never do count as
/// infinitely slow.
fn median_time_to(records: &[RunRecord], target: f64) -> f64 {
    median(
        records
            .iter()
            .map(|r| r.time_to_reach(target).unwrap_or(f64::INFINITY))
            .collect(),
    )
}

/// Tabulates experiments on one problem and budget, with pairwise time
/// ratios for every pair in input order.
pub fn compare_report(experiments: &[Experiment]) -> Result<ComparisonReport> {
    let first = experiments
        .first()
        .ok_or_else(|| Error::invalid("nothing to compare"))?;
    let problem = first.summary.config.problem.clone();
    let budget = first.summary.config.budget;
    for e in experiments {
        let c = &e.summary.config;
        if c.problem != problem || c.budget != budget {
            return Err(Error::invalid(format!(
                "cannot compare {} (problem {}, budget {}) with problem {problem}, budget {budget}",
                c.label(),
                c.problem,
                c.budget
            )));
        }
        if e.summary.stats.is_none() || e.records.is_empty() {
            return Err(Error::invalid(format!(
                "{} has no successful runs",
                c.label()
            )));
        }
    }

    let rows: Vec<ReportRow> = experiments
        .iter()
        .map(|e| {
            let s = e.summary.stats.as_ref().expect("checked above");
            ReportRow {
                label: e.summary.config.label(),
                runs: s.runs,
                mean_final: s.mean,
                mean_time: s.mean_time,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..experiments.len() {
        for j in i + 1..experiments.len() {
            let (ra, rb) = (&rows[i], &rows[j]);
            let target =
                median_final(&experiments[i].records).min(median_final(&experiments[j].records));
            let ta = median_time_to(&experiments[i].records, target);
            let tb = median_time_to(&experiments[j].records, target);
            let time_ratio = ra.mean_time / rb.mean_time;
            pairs.push(PairRatio {
                a: ra.label.clone(),
                b: rb.label.clone(),
                time_ratio,
                time_reduction: 1.0 - time_ratio,
                matched_target: target,
                matched_time_ratio: (ta.is_finite() && tb.is_finite() && tb > 0.0).then(|| ta / tb),
            });
        }
    }
    Ok(ComparisonReport {
        problem,
        budget,
        rows,
        pairs,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem {}  budget {}", self.problem, self.budget)?;
        writeln!(
            f,
            "{:<28} {:>5} {:>14} {:>14}",
            "variant", "runs", "mean final", "mean time"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<28} {:>5} {:>14.6} {:>14.2}",
                r.label, r.runs, r.mean_final, r.mean_time
            )?;
        }
        if !self.pairs.is_empty() {
            writeln!(f)?;
            writeln!(
                f,
                "{:<28} {:<28} {:>10} {:>10} {:>14}",
                "a", "b", "time a/b", "reduction", "matched a/b"
            )?;
            for p in &self.pairs {
                let matched = match p.matched_time_ratio {
                    Some(r) => format!("{r:.4}"),
                    None => "-".into(),
                };
                writeln!(
                    f,
                    "{:<28} {:<28} {:>10.4} {:>9.1}% {:>14}",
                    p.a,
                    p.b,
                    p.time_ratio,
                    100.0 * p.time_reduction,
                    matched
                )?;
            }
        }
        Ok(())
    }
}
