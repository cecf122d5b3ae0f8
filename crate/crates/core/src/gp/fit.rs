//! Type-II maximum likelihood for the kernel hyperparameters.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelHyperparams, NOISE_FLOOR};
use super::lbfgs;
use super::model::GpModel;
use crate::domain::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::seeds;

/// Multi-start settings and search box for hyperparameter fitting.
/// Bounds apply to unit-cube inputs and standardized outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub length_scale_bounds: (f64, f64),
    pub signal_variance_bounds: (f64, f64),
    pub noise_variance_bounds: (f64, f64),
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 100,
            length_scale_bounds: (1e-2, 10.0),
            signal_variance_bounds: (1e-2, 1e2),
            noise_variance_bounds: (NOISE_FLOOR, 1e-1),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::invalid(
                "fit needs at least one start and one iteration",
            ));
        }
        for (name, (lo, hi)) in [
            ("length_scale_bounds", self.length_scale_bounds),
            ("signal_variance_bounds", self.signal_variance_bounds),
            ("noise_variance_bounds", self.noise_variance_bounds),
        ] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} = ({lo}, {hi}) is not a positive interval"
                )));
            }
        }
        if self.noise_variance_bounds.0 < NOISE_FLOOR {
            return Err(Error::invalid(format!(
                "noise lower bound must be at least {NOISE_FLOOR}"
            )));
        }
        Ok(())
    }

    /// Log-space box `(lower, upper)` over `[ln l.., ln σ_f², ln σ_n²]`.
    fn log_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.length_scale_bounds.0.ln(); dim];
        let mut hi = vec![self.length_scale_bounds.1.ln(); dim];
        lo.push(self.signal_variance_bounds.0.ln());
        hi.push(self.signal_variance_bounds.1.ln());
        lo.push(self.noise_variance_bounds.0.ln());
        hi.push(self.noise_variance_bounds.1.ln());
        (lo, hi)
    }
}

/// Log marginal likelihood of standardized data as a function of the
/// log-hyperparameters. Pairwise squared coordinate differences are cached
/// so each evaluation only rebuilds the kernel matrix.
#[derive(Debug, Clone)]
pub struct LogMarginalLikelihood {
    n: usize,
    dim: usize,
    // per lower-triangle pair (i > j), `dim` squared differences
    sq_diff: Vec<f64>,
    z: DVector<f64>,
}

impl LogMarginalLikelihood {
    pub fn new(data: &Dataset, standardizer: Standardizer) -> Result<Self> {
        let dim = data.dim().ok_or_else(|| Error::invalid("empty dataset"))?;
        let n = data.len();
        let xs = data.inputs();
        let mut sq_diff = Vec::with_capacity(n * (n.saturating_sub(1)) / 2 * dim);
        for i in 1..n {
            for j in 0..i {
                for (a, b) in xs[i].coords().iter().zip(xs[j].coords()) {
                    sq_diff.push((a - b) * (a - b));
                }
            }
        }
        let z = DVector::from_iterator(
            n,
            data.observations().iter().map(|&y| standardizer.apply(y)),
        );
        Ok(Self { n, dim, sq_diff, z })
    }

    pub fn n_params(&self) -> usize {
        self.dim + 2
    }

    /// Value and gradient at log-hyperparameters `theta`; `None` if the
    /// covariance is not positive definite there.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (n, d) = (self.n, self.dim);
        let inv_sq_len: Vec<f64> = theta[..d].iter().map(|t| (-2.0 * t).exp()).collect();
        let sf2 = theta[d].exp();
        let sn2 = theta[d + 1].exp();

        let mut pair_k = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        let mut k = DMatrix::zeros(n, n);
        let mut p = 0;
        for i in 0..n {
            k[(i, i)] = sf2 + sn2;
            for j in 0..i {
                let r2: f64 = self.sq_diff[p * d..(p + 1) * d]
                    .iter()
                    .zip(&inv_sq_len)
                    .map(|(s, w)| s * w)
                    .sum();
                let v = sf2 * (-0.5 * r2).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
                pair_k.push(v);
                p += 1;
            }
        }
        let chol = Cholesky::new(k)?;
        let l = chol.l_dirty();
        let mut log_det = 0.0;
        for i in 0..n {
            let lii = l[(i, i)];
            if !(lii.is_finite() && lii > 0.0) {
                return None;
            }
            log_det += lii.ln();
        }
        let alpha = chol.solve(&self.z);
        let k_inv = inverse_from_factor(l);
        let value = -0.5 * self.z.dot(&alpha)
            - log_det
            - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // dL/dθ = ½ tr((ααᵀ - K⁻¹) ∂K/∂θ)
        let mut grad = vec![0.0; d + 2];
        let mut trace_w = 0.0;
        for i in 0..n {
            trace_w += alpha[i] * alpha[i] - k_inv[i * n + i];
        }
        let mut p = 0;
        for i in 1..n {
            for j in 0..i {
                let w = alpha[i] * alpha[j] - k_inv[j * n + i];
                let wk = w * pair_k[p];
                grad[d] += wk;
                for (g, (s, il)) in grad[..d]
                    .iter_mut()
                    .zip(self.sq_diff[p * d..(p + 1) * d].iter().zip(&inv_sq_len))
                {
                    *g += wk * s * il;
                }
                p += 1;
            }
        }
        grad[d] += 0.5 * sf2 * trace_w;
        grad[d + 1] = 0.5 * sn2 * trace_w;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return None;
        }
        Some((value, grad))
    }
}

/// Lower triangle (column-major, `n × n` buffer) of `(L Lᵀ)⁻¹` given the
/// lower factor `L`; entries above the diagonal are left at zero.
fn inverse_from_factor(l: &DMatrix<f64>) -> Vec<f64> {
    let n = l.nrows();
    let ls = l.as_slice();
    // columns of L⁻¹, each zero above its diagonal
    let mut linv = vec![0.0; n * n];
    for j in 0..n {
        let col = &mut linv[j * n..(j + 1) * n];
        col[j] = 1.0;
        for c in j..n {
            let lc = &ls[c * n..(c + 1) * n];
            let v = col[c] / lc[c];
            col[c] = v;
            if v != 0.0 {
                for (x, &lv) in col[c + 1..].iter_mut().zip(&lc[c + 1..]) {
                    *x -= lv * v;
                }
            }
        }
    }
    // (L⁻ᵀ L⁻¹)[i][j] = Σ_{k ≥ i} L⁻¹[k][i] L⁻¹[k][j] for i ≥ j
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        let cj = &linv[j * n..(j + 1) * n];
        for i in j..n {
            let ci = &linv[i * n..(i + 1) * n];
            out[j * n + i] = ci[i..].iter().zip(&cj[i..]).map(|(a, b)| a * b).sum();
        }
    }
    out
}

impl GpModel {
    /// Fits kernel hyperparameters by multi-start maximization of the log
    /// marginal likelihood, then conditions on `data`.
    ///
    /// The first start is `warm_start` (clamped into the search box) when
    /// given, otherwise the geometric center of the box; the remaining
    /// starts are drawn log-uniformly from the box using `seed`.
    pub fn fit(
        data: &Dataset,
        cfg: &FitConfig,
        seed: u64,
        warm_start: Option<&KernelHyperparams>,
    ) -> Result<GpModel> {
        cfg.validate()?;
        if data.len() < 2 {
            return Err(Error::invalid(format!(
                "fitting needs at least 2 observations, got {}",
                data.len()
            )));
        }
        let dim = data.dim().expect("non-empty");
        let standardizer = Standardizer::fit(data.observations());
        let lml = LogMarginalLikelihood::new(data, standardizer)?;
        let (lo, hi) = cfg.log_box(dim);

        let mut rng = seeds::rng(seed);
        let mut starts = Vec::with_capacity(cfg.n_starts);
        starts.push(match warm_start {
            Some(h) if h.dim() == dim => h.to_log(),
            _ => lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        });
        while starts.len() < cfg.n_starts {
            starts.push(
                lo.iter()
                    .zip(&hi)
                    .map(|(a, b)| rng.random_range(*a..*b))
                    .collect(),
            );
        }

        let mut best: Option<lbfgs::Minimum> = None;
        for start in &starts {
            let found = lbfgs::minimize(
                |theta| {
                    lml.value_and_gradient(theta)
                        .map(|(v, g)| (-v, g.into_iter().map(|x| -x).collect()))
                },
                start,
                &lo,
                &hi,
                cfg.max_iters,
            );
            if let Some(m) = found {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
        }

        let theta = match best {
            Some(m) => m.x,
            None => starts.swap_remove(0),
        };
        GpModel::assemble(
            data.clone(),
            KernelHyperparams::from_log(&theta),
            standardizer,
        )
    }
}
