//! Projected L-BFGS for smooth objectives over a box.
//!
//! Small and dependency-free; it only has to handle the few-dozen-dimensional
//! hyperparameter problems of `fit`. Variables sitting on a bound whose
//! gradient points outward are frozen for the step; the search direction is
//! projected back onto the box during the backtracking line search.

use std::collections::VecDeque;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimizes `f` over `[lower, upper]` starting at `x0`. `f` returns the value
/// and gradient, or `None` where it is undefined; undefined points are
/// treated as infinitely bad. Returns `None` when `f` is undefined at the
/// (clamped) start.
pub(crate) fn minimize<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iters: usize,
) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };

    let mut x = x0.to_vec();
    project(&mut x);
    let (mut fx, mut g) =
        f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|t| t.is_finite()))?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);

    for _ in 0..max_iters {
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg: Vec<f64> = (0..n).map(|i| if free[i] { g[i] } else { 0.0 }).collect();
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-8 {
            break;
        }

        let mut dir = two_loop(&pg, &history);
        for i in 0..n {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        if dot(&dir, &pg) >= 0.0 {
            history.clear();
            dir = pg.iter().map(|v| -v).collect();
        }

        // cap the first trial step at unit length in the infinity norm
        let dmax = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = if history.is_empty() {
            (1.0 / dmax).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            project(&mut xn);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &step);
            if decrease < 0.0 {
                if let Some((fn_, gn)) = f(&xn) {
                    if fn_.is_finite()
                        && gn.iter().all(|v| v.is_finite())
                        && fn_ <= fx + ARMIJO * decrease
                    {
                        accepted = Some((xn, fn_, gn, step));
                        break;
                    }
                }
            }
            t *= 0.5;
        }

        let Some((xn, fn_, gn, step)) = accepted else {
            if history.is_empty() {
                break;
            }
            history.clear();
            continue;
        };

        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &yv);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((step, yv, 1.0 / sy));
        }
        let change = (fx - fn_).abs();
        x = xn;
        fx = fn_;
        g = gn;
        if change <= 1e-12 * (1.0 + fx.abs()) {
            break;
        }
    }

    Some(Minimum { x, value: fx })
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
