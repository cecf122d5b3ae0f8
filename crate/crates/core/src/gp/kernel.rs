use serde::{Deserialize, Serialize};

use crate::domain::DesignPoint;
use crate::error::{Error, Result};

/// Lower bound enforced on the observation-noise variance.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Hyperparameters of the squared-exponential ARD kernel plus Gaussian
/// observation noise. Values refer to unit-cube inputs and standardized
/// outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelHyperparams {
    pub fn new(length_scales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let h = Self {
            length_scales,
            signal_variance,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    /// Isotropic hyperparameters, handy for tests and warm starts.
    pub fn isotropic(
        dim: usize,
        length_scale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::new(vec![length_scale; dim], signal_variance, noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_scales.is_empty() {
            return Err(Error::invalid("kernel needs at least one length scale"));
        }
        if let Some(l) = self
            .length_scales
            .iter()
            .find(|l| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::invalid(format!("length scale {l} must be positive")));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::invalid(format!(
                "signal variance {} must be positive",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= NOISE_FLOOR) {
            return Err(Error::invalid(format!(
                "noise variance {} is below the floor {NOISE_FLOOR}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// `[ln l_1, .., ln l_d, ln σ_f², ln σ_n²]`, the space `fit` searches.
    pub fn to_log(&self) -> Vec<f64> {
        self.length_scales
            .iter()
            .map(|l| l.ln())
            .chain([self.signal_variance.ln(), self.noise_variance.ln()])
            .collect()
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let d = theta.len() - 2;
        Self {
            length_scales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
            noise_variance: theta[d + 1].exp().max(NOISE_FLOOR),
        }
    }

    pub(crate) fn inv_sq_lengths(&self) -> Vec<f64> {
        self.length_scales.iter().map(|l| 1.0 / (l * l)).collect()
    }
}

/// `σ_f² exp(-½ (a-b)ᵀ Λ⁻¹ (a-b))` with `Λ = diag(l²)`.
pub fn kernel_se(a: &DesignPoint, b: &DesignPoint, h: &KernelHyperparams) -> Result<f64> {
    if a.dim() != b.dim() || a.dim() != h.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: a={}, b={}, kernel={}",
            a.dim(),
            b.dim(),
            h.dim()
        )));
    }
    Ok(se(
        a.coords(),
        b.coords(),
        &h.inv_sq_lengths(),
        h.signal_variance,
    ))
}

#[inline]
pub(crate) fn se(a: &[f64], b: &[f64], inv_sq_len: &[f64], signal_variance: f64) -> f64 {
    let mut r2 = 0.0;
    for ((x, y), w) in a.iter().zip(b).zip(inv_sq_len) {
        let t = x - y;
        r2 += t * t * w;
    }
    signal_variance * (-0.5 * r2).exp()
}
