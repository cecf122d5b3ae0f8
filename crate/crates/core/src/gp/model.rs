use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{se, KernelHyperparams};
use crate::domain::{Dataset, DesignPoint, Standardizer};
use crate::error::{Error, Result};

/// First diagonal jitter tried when a factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Jitter grows by this factor per retry.
pub const JITTER_GROWTH: f64 = 10.0;
pub const JITTER_RETRIES: usize = 6;

/// Predictive distribution of the latent function at one point, in the
/// original output units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub stddev: f64,
}

/// An exact GP regression model conditioned on a dataset.
///
/// Immutable once built: fitting and hallucination return new models.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyperparams: KernelHyperparams,
    training: Dataset,
    standardizer: Standardizer,
    inv_sq_len: Vec<f64>,
    // row-major copy of the training inputs
    x: Vec<f64>,
    dim: usize,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Conditions a GP with fixed hyperparameters on `data`, standardizing the
    /// observations with their own mean and spread.
    pub fn with_hyperparams(data: Dataset, hyperparams: KernelHyperparams) -> Result<Self> {
        let standardizer = Standardizer::fit(data.observations());
        Self::assemble(data, hyperparams, standardizer)
    }

    /// Conditions on `data` using a caller-supplied output transform.
    pub fn assemble(
        data: Dataset,
        hyperparams: KernelHyperparams,
        standardizer: Standardizer,
    ) -> Result<Self> {
        hyperparams.validate()?;
        let dim = match data.dim() {
            Some(d) => d,
            None => return Err(Error::invalid("cannot condition a GP on an empty dataset")),
        };
        if dim != hyperparams.dim() {
            return Err(Error::invalid(format!(
                "data has dimension {dim}, kernel has {}",
                hyperparams.dim()
            )));
        }
        let n = data.len();
        let x: Vec<f64> = data
            .inputs()
            .iter()
            .flat_map(|p| p.coords().iter().copied())
            .collect();
        let inv_sq_len = hyperparams.inv_sq_lengths();
        let sf2 = hyperparams.signal_variance;
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                sf2 + hyperparams.noise_variance
            } else {
                se(
                    &x[i * dim..(i + 1) * dim],
                    &x[j * dim..(j + 1) * dim],
                    &inv_sq_len,
                    sf2,
                )
            }
        });
        let (chol, jitter) = factorize(k, "GP covariance")?;
        let z = DVector::from_iterator(
            n,
            data.observations().iter().map(|&y| standardizer.apply(y)),
        );
        let alpha = chol.solve(&z);
        Ok(Self {
            hyperparams,
            training: data,
            standardizer,
            inv_sq_len,
            x,
            dim,
            chol: chol.unpack(),
            alpha,
            jitter,
        })
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyperparams
    }

    pub fn training(&self) -> &Dataset {
        &self.training
    }

    pub fn standardizer(&self) -> Standardizer {
        self.standardizer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower-triangular `L` with `L Lᵀ = K + jitter·I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `K⁻¹ z` for the standardized observations `z`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Extra diagonal jitter the factorization needed (0 when none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Noise standard deviation in original output units.
    pub fn noise_stddev(&self) -> f64 {
        self.hyperparams.noise_variance.sqrt() * self.standardizer.scale
    }

    /// Prior standard deviation in original output units.
    pub fn prior_stddev(&self) -> f64 {
        self.hyperparams.signal_variance.sqrt() * self.standardizer.scale
    }

    /// Log marginal likelihood of the standardized observations.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.training.len();
        let z = DVector::from_iterator(
            n,
            self.training
                .observations()
                .iter()
                .map(|&y| self.standardizer.apply(y)),
        );
        let log_det: f64 = (0..n).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * z.dot(&self.alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn posterior(&self, q: &DesignPoint) -> Result<Posterior> {
        if q.dim() != self.dim {
            return Err(Error::invalid(format!(
                "query has dimension {}, model has {}",
                q.dim(),
                self.dim
            )));
        }
        Ok(self.posterior_at(q.coords()))
    }

    /// Posterior at unit-cube coordinates, unchecked fast path.
    pub fn posterior_at(&self, q: &[f64]) -> Posterior {
        let mut k = self.cross_covariance(q);
        let mean = self.standardizer.invert(k.dot(&self.alpha));
        let var = self.reduced_variance(&mut k);
        Posterior {
            mean,
            stddev: var.sqrt() * self.standardizer.scale,
        }
    }

    pub fn mean_at(&self, q: &[f64]) -> f64 {
        self.standardizer
            .invert(self.cross_covariance(q).dot(&self.alpha))
    }

    pub fn stddev_at(&self, q: &[f64]) -> f64 {
        let mut k = self.cross_covariance(q);
        self.reduced_variance(&mut k).sqrt() * self.standardizer.scale
    }

    fn cross_covariance(&self, q: &[f64]) -> DVector<f64> {
        debug_assert_eq!(q.len(), self.dim);
        let sf2 = self.hyperparams.signal_variance;
        DVector::from_iterator(
            self.training.len(),
            self.x
                .chunks_exact(self.dim)
                .map(|xi| se(q, xi, &self.inv_sq_len, sf2)),
        )
    }

    /// `k(q,q) - kᵀ K⁻¹ k` in standardized units, clamped at zero. Overwrites
    /// `k` with `L⁻¹ k`.
    fn reduced_variance(&self, k: &mut DVector<f64>) -> f64 {
        forward_substitute(&self.chol, k.as_mut_slice());
        let var = self.hyperparams.signal_variance - k.norm_squared();
        var.max(0.0)
    }

    /// Conditions on pseudo-observations at `pending`, each set to this
    /// model's posterior mean there. Hyperparameters and output transform
    /// are reused, so the posterior mean is unchanged and the variance can
    /// only shrink.
    pub fn hallucinate(&self, pending: &[DesignPoint]) -> Result<GpModel> {
        if pending.is_empty() {
            return Ok(self.clone());
        }
        if let Some(p) = pending.iter().find(|p| p.dim() != self.dim) {
            return Err(Error::invalid(format!(
                "pending point has dimension {}, model has {}",
                p.dim(),
                self.dim
            )));
        }
        let mut data = self.training.clone();
        for p in pending {
            data.push(p.clone(), self.mean_at(p.coords()))?;
        }
        match self.extend_factor(pending) {
            Some(chol) => {
                let n = data.len();
                let z = DVector::from_iterator(
                    n,
                    data.observations()
                        .iter()
                        .map(|&y| self.standardizer.apply(y)),
                );
                let alpha = Cholesky::pack_dirty(chol.clone()).solve(&z);
                let x = data
                    .inputs()
                    .iter()
                    .flat_map(|p| p.coords().iter().copied())
                    .collect();
                Ok(Self {
                    hyperparams: self.hyperparams.clone(),
                    training: data,
                    standardizer: self.standardizer,
                    inv_sq_len: self.inv_sq_len.clone(),
                    x,
                    dim: self.dim,
                    chol,
                    alpha,
                    jitter: self.jitter,
                })
            }
            None => Self::assemble(data, self.hyperparams.clone(), self.standardizer),
        }
    }

    /// Block update of the Cholesky factor for appended points:
    /// `[[L, 0], [Sᵀ, L₂₂]]` with `S = L⁻¹K₁₂`, `L₂₂ = chol(K₂₂ - SᵀS)`.
    /// `None` when the Schur complement is not numerically positive definite.
    fn extend_factor(&self, pending: &[DesignPoint]) -> Option<DMatrix<f64>> {
        let n = self.training.len();
        let m = pending.len();
        let sf2 = self.hyperparams.signal_variance;
        let mut s = DMatrix::zeros(n, m);
        for (j, p) in pending.iter().enumerate() {
            let mut col = self.cross_covariance(p.coords());
            forward_substitute(&self.chol, col.as_mut_slice());
            s.set_column(j, &col);
        }
        let diag = sf2 + self.hyperparams.noise_variance + self.jitter;
        let mut schur = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                diag
            } else {
                se(
                    pending[i].coords(),
                    pending[j].coords(),
                    &self.inv_sq_len,
                    sf2,
                )
            }
        });
        schur -= s.transpose() * &s;
        let l22 = Cholesky::new(schur)?.unpack();
        if (0..m).any(|i| !(l22[(i, i)].is_finite() && l22[(i, i)] > 0.0)) {
            return None;
        }
        let mut chol = DMatrix::zeros(n + m, n + m);
        chol.view_mut((0, 0), (n, n)).copy_from(&self.chol);
        chol.view_mut((n, 0), (m, n)).copy_from(&s.transpose());
        chol.view_mut((n, n), (m, m)).copy_from(&l22);
        Some(chol)
    }
}

/// Solves `L v = b` in place for lower-triangular, column-major `L`.
pub(crate) fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    let rows = l.nrows();
    let data = l.as_slice();
    for j in 0..n {
        let col = &data[j * rows..j * rows + n];
        let vj = b[j] / col[j];
        b[j] = vj;
        if vj != 0.0 {
            for (bi, &c) in b[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *bi -= c * vj;
            }
        }
    }
}

/// Cholesky factorization with diagonal jitter escalation.
pub(crate) fn factorize(k: DMatrix<f64>, context: &str) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = checked_cholesky(k.clone()) {
        return Ok((c, 0.0));
    }
    let n = k.nrows();
    let mut tried = Vec::with_capacity(JITTER_RETRIES);
    let mut jitter = JITTER_START;
    for _ in 0..JITTER_RETRIES {
        tried.push(jitter);
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = checked_cholesky(kj) {
            return Ok((c, jitter));
        }
        jitter *= JITTER_GROWTH;
    }
    Err(Error::NumericalFailure {
        context: format!("{context} ({n}x{n}) is not positive definite"),
        jitters: tried,
    })
}

fn checked_cholesky(k: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if k.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let c = Cholesky::new(k)?;
    let l = c.l_dirty();
    (0..l.nrows())
        .all(|i| l[(i, i)].is_finite() && l[(i, i)] > 0.0)
        .then_some(c)
}
