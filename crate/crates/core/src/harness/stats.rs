use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Statistics of the final values and simulated times of a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub runs: usize,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one run.
    pub std: f64,
    pub mean_time: f64,
    pub total_time: f64,
}

impl SummaryStats {
    /// `finals[i]` and `times[i]` belong to the same run.
    pub fn from_runs(finals: &[f64], times: &[f64]) -> Result<Self> {
        if finals.is_empty() {
            return Err(Error::invalid("no successful runs to summarize"));
        }
        if finals.len() != times.len() {
            return Err(Error::invalid(format!(
                "{} final values but {} times",
                finals.len(),
                times.len()
            )));
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = if finals.len() > 1 {
            (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let total_time: f64 = times.iter().sum();
        let best = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = finals.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            runs: finals.len(),
            best,
            worst,
            // rounding can push the mean of equal values just outside the range
            mean: mean.clamp(worst, best),
            std,
            mean_time: total_time / n,
            total_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_run() {
        let s = SummaryStats::from_runs(&[2.5], &[7.0]).unwrap();
        assert_eq!((s.best, s.worst, s.mean, s.std), (2.5, 2.5, 2.5, 0.0));
        assert_eq!(s.mean_time, 7.0);
    }

    #[test]
    fn known_values() {
        let s = SummaryStats::from_runs(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 30.0, 40.0]).unwrap();
        assert_eq!(s.best, 4.0);
        assert_eq!(s.worst, 1.0);
        assert_eq!(s.mean, 2.5);
        assert_relative_eq!(s.std, (5.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_eq!(s.total_time, 100.0);
        assert_eq!(s.mean_time, 25.0);
    }

    #[test]
    fn empty_or_mismatched_is_an_error() {
        assert!(SummaryStats::from_runs(&[], &[]).is_err());
        assert!(SummaryStats::from_runs(&[1.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn ordering_invariants(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let t = vec![1.0; v.len()];
            let s = SummaryStats::from_runs(&v, &t).unwrap();
            prop_assert!(s.worst <= s.mean && s.mean <= s.best);
            prop_assert!(s.std >= 0.0);
        }
    }
}
