//! Maximization of an acquisition function over the unit cube.
//!
//! Two phases: a scrambled Sobol screening set, then a compass (coordinate
//! pattern) search with a shrinking step from the best screening points.
//! Derivative-free, so it works unchanged for penalized and hallucinated
//! criteria.

use serde::{Deserialize, Serialize};

use crate::design::sobol_points;
use crate::domain::{BoxDomain, DesignPoint};
use crate::error::{Error, Result};

const INITIAL_STEP: f64 = 0.05;
const MIN_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerOptConfig {
    pub n_random: usize,
    pub n_local_starts: usize,
    /// Each local search may spend `local_max_iters * (dim + 1)` evaluations.
    pub local_max_iters: usize,
    pub seed: u64,
}

impl Default for InnerOptConfig {
    fn default() -> Self {
        Self {
            n_random: 2048,
            n_local_starts: 10,
            local_max_iters: 50,
            seed: 0,
        }
    }
}

impl InnerOptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_random == 0 || self.n_local_starts == 0 || self.local_max_iters == 0 {
            return Err(Error::invalid(
                "n_random, n_local_starts and local_max_iters must all be >= 1",
            ));
        }
        Ok(())
    }

    /// Upper bound on objective evaluations for a `dim`-dimensional search.
    pub fn max_evaluations(&self, dim: usize) -> usize {
        self.n_random + self.n_local_starts * self.local_max_iters * (dim + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOptResult {
    pub point: DesignPoint,
    pub value: f64,
    /// Best value found in the screening phase.
    pub screening_best: f64,
    pub evaluations: usize,
}

/// Maximizes `f` over the unit cube of `domain`. `f` receives unit-cube
/// coordinates. Non-finite values are treated as infeasible.
pub fn maximize_acq<F>(f: F, domain: &BoxDomain, cfg: &InnerOptConfig) -> Result<InnerOptResult>
where
    F: Fn(&[f64]) -> f64,
{
    cfg.validate()?;
    let dim = domain.dim();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };

    let screen = sobol_points(cfg.n_random, dim, cfg.seed)?;
    let values: Vec<f64> = screen.iter().map(|p| eval(p.coords())).collect();

    // stable sort: equal values keep screening order
    let mut order: Vec<usize> = (0..screen.len())
        .filter(|&i| values[i] > f64::NEG_INFINITY)
        .collect();
    if order.is_empty() {
        return Err(Error::OptimizationFailure(format!(
            "acquisition was non-finite at all {} screening points",
            screen.len()
        )));
    }
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let screening_best = values[order[0]];

    let mut best_x = screen[order[0]].coords().to_vec();
    let mut best_v = screening_best;
    let budget = cfg.local_max_iters * (dim + 1);
    for &start in order.iter().take(cfg.n_local_starts) {
        let (x, v) = compass_search(&mut eval, screen[start].coords(), values[start], budget);
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }

    Ok(InnerOptResult {
        point: DesignPoint::clamped(best_x),
        value: best_v,
        screening_best,
        evaluations,
    })
}

fn compass_search<F>(eval: &mut F, x0: &[f64], f0: f64, mut budget: usize) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut step = INITIAL_STEP;
    let mut cand = x.clone();
    'outer: while budget > 0 && step >= MIN_STEP {
        let mut improved = false;
        for i in 0..dim {
            for dir in [1.0, -1.0] {
                let moved = (x[i] + dir * step).clamp(0.0, 1.0);
                if moved == x[i] {
                    continue;
                }
                if budget == 0 {
                    break 'outer;
                }
                cand.copy_from_slice(&x);
                cand[i] = moved;
                budget -= 1;
                let v = eval(&cand);
                if v > fx {
                    fx = v;
                    x[i] = moved;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}
