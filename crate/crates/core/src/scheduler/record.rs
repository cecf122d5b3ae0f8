use serde::{Deserialize, Serialize};

use crate::domain::euclidean;

/// Execution regime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sequential,
    Sync,
    Async,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Sequential => "sequential",
            Regime::Sync => "sync",
            Regime::Async => "async",
        })
    }
}

/// One completed evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    /// Position in issue order (0-based).
    pub issue_index: usize,
    pub worker: usize,
    pub issue_time: f64,
    pub completion_time: f64,
    /// Query in the problem's coordinates.
    pub point: Vec<f64>,
    /// Query in unit-cube coordinates.
    pub unit_point: Vec<f64>,
    pub observation: f64,
    pub regime: Regime,
    /// Acquisition weight used to choose the point, if any.
    pub weight: Option<f64>,
    /// `true` for initial-design points.
    pub initial: bool,
    /// Completions that had been processed when this point was issued.
    pub issued_after: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub time: f64,
    pub value: f64,
}

/// Full trace of one optimization run. `events` are in processing
/// (completion) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub regime: Regime,
    pub batch_size: usize,
    pub events: Vec<RunEvent>,
    pub best_curve: Vec<CurvePoint>,
    pub total_sim_time: f64,
}

impl RunRecord {
    pub fn new(
        seed: u64,
        regime: Regime,
        batch_size: usize,
        events: Vec<RunEvent>,
        total_sim_time: f64,
    ) -> Self {
        let best_curve = best_curve(&events);
        Self {
            seed,
            regime,
            batch_size,
            events,
            best_curve,
            total_sim_time,
        }
    }

    /// `max(y)` over all observations.
    pub fn best_value(&self) -> Option<f64> {
        self.best_curve.last().map(|c| c.value)
    }

    pub fn best_event(&self) -> Option<&RunEvent> {
        self.events
            .iter()
            .reduce(|a, b| if b.observation > a.observation { b } else { a })
    }

    /// First simulated time at which the best-so-far value reaches `target`.
    pub fn time_to_reach(&self, target: f64) -> Option<f64> {
        self.best_curve
            .iter()
            .find(|c| c.value >= target)
            .map(|c| c.time)
    }

    /// For every model-chosen query, the smallest unit-cube distance between
    /// any two points in flight right after it was issued (the query itself
    /// included). Queries issued into an otherwise idle pool are skipped.
    pub fn in_flight_min_distances(&self) -> Vec<f64> {
        let mut position = vec![0usize; self.events.len()];
        for (pos, e) in self.events.iter().enumerate() {
            position[e.issue_index] = pos;
        }
        let mut by_issue: Vec<&RunEvent> = self.events.iter().collect();
        by_issue.sort_by_key(|e| e.issue_index);

        let mut out = Vec::new();
        for e in by_issue.iter().filter(|e| !e.initial) {
            let flight: Vec<&[f64]> = by_issue[..e.issue_index]
                .iter()
                .filter(|o| position[o.issue_index] >= e.issued_after)
                .map(|o| o.unit_point.as_slice())
                .chain(std::iter::once(e.unit_point.as_slice()))
                .collect();
            if flight.len() < 2 {
                continue;
            }
            let mut min = f64::INFINITY;
            for i in 0..flight.len() {
                for j in 0..i {
                    min = min.min(euclidean(flight[i], flight[j]));
                }
            }
            out.push(min);
        }
        out
    }
}

/// Running maximum of the observations, one point per completion.
pub fn best_curve(events: &[RunEvent]) -> Vec<CurvePoint> {
    let mut best = f64::NEG_INFINITY;
    events
        .iter()
        .map(|e| {
            best = best.max(e.observation);
            CurvePoint {
                time: e.completion_time,
                value: best,
            }
        })
        .collect()
}
