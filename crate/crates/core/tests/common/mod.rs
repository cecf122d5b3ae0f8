#![allow(dead_code)]

use easybo::acq_optimizer::InnerOptConfig;
use easybo::acquisition::{AcquisitionKind, AcquisitionSpec};
use easybo::gp::FitConfig;
use easybo::scheduler::RunConfig;

/// Small fit and inner-search settings for tests that only care about the
/// schedule, not the quality of each suggestion.
pub fn cheap(kind: AcquisitionKind, budget: usize, n_init: usize, batch_size: usize) -> RunConfig {
    RunConfig {
        budget,
        n_init,
        batch_size,
        acquisition: AcquisitionSpec::new(kind),
        fit: FitConfig {
            n_starts: 1,
            max_iters: 20,
            ..FitConfig::default()
        },
        inner: InnerOptConfig {
            n_random: 64,
            n_local_starts: 1,
            local_max_iters: 5,
            seed: 0,
        },
        refit_every: 10,
        ..RunConfig::default()
    }
}

/// Dense Gauss-Jordan inverse with partial pivoting, row-major.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `σ_f² exp(-½ Σ (a_i - b_i)² / l_i²)`, written out directly.
pub fn se_kernel(a: &[f64], b: &[f64], ls: &[f64], sf2: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = (a[i] - b[i]) / ls[i];
        s += d * d;
    }
    sf2 * (-0.5 * s).exp()
}

/// Posterior mean and variance from the textbook formulas with an explicit
/// inverse, in standardized units.
pub fn dense_posterior(
    xs: &[Vec<f64>],
    z: &[f64],
    ls: &[f64],
    sf2: f64,
    sn2: f64,
    q: &[f64],
) -> (f64, f64) {
    let n = xs.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| se_kernel(&xs[i], &xs[j], ls, sf2) + if i == j { sn2 } else { 0.0 })
                .collect()
        })
        .collect();
    let kinv = gauss_jordan_inverse(&k);
    let ks: Vec<f64> = xs.iter().map(|x| se_kernel(q, x, ls, sf2)).collect();
    let mut mean = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            mean += ks[i] * kinv[i][j] * z[j];
            quad += ks[i] * kinv[i][j] * ks[j];
        }
    }
    (mean, sf2 - quad)
}
