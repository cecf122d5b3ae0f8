//! Acquisition functions.
//!
//! All criteria follow the maximization convention and return values in the
//! objective's own units:
//!
//! * confidence bounds `μ ± κσ` and expected improvement,
//! * the weighted mean/stddev criterion `(1-w)μ + wσ` with fixed per-slot
//!   weights, optionally minus a distance penalty around the slot's recent
//!   queries,
//! * the randomized-weight criterion, where `w = κ/(κ+1)` with
//!   `κ ~ U[0, λ]` and `σ` is replaced by the standard deviation of a model
//!   that has been conditioned on hallucinated observations at the pending
//!   points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{euclidean, DesignPoint};
use crate::error::{Error, Result};
use crate::gp::GpModel;

/// Finite stand-in for the distance penalty at a repeated point.
pub const PENALTY_SENTINEL: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AcquisitionKind {
    Ucb,
    Lcb,
    Ei,
    Pbo,
    Phcbo,
    Easybo,
}

/// Which acquisition to use and its parameters. Parameters that do not
/// apply to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Confidence-bound multiplier.
    pub kappa: f64,
    /// Fixed weight for a single weighted-criterion evaluation.
    pub weight: f64,
    /// Upper end of the uniform range for the randomized weight's `κ`.
    pub lambda: f64,
    /// Neighborhood radius of the distance penalty, unit-cube units.
    /// `None` means `0.05·√dim`.
    pub hc_distance: Option<f64>,
    /// Penalty magnitude. `None` means 10 × the observed value range
    /// (at least 10).
    pub hc_scale: Option<f64>,
    /// Number of recent queries per slot the penalty looks at.
    pub history_window: usize,
    /// Penalty history per weight slot (`true`) or shared by all slots.
    pub per_slot_history: bool,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self {
            kind: AcquisitionKind::Easybo,
            kappa: 2.0,
            weight: 0.5,
            lambda: 6.0,
            hc_distance: None,
            hc_scale: None,
            history_window: 5,
            per_slot_history: true,
        }
    }
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid(format!(
                "kappa = {} must be >= 0",
                self.kappa
            )));
        }
        if !(0.0..=1.0).contains(&self.weight) {
            return Err(Error::invalid(format!(
                "weight = {} must lie in [0, 1]",
                self.weight
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid(format!(
                "lambda = {} must be > 0",
                self.lambda
            )));
        }
        if let Some(d) = self.hc_distance {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(format!("hc_distance = {d} must be > 0")));
            }
        }
        if let Some(s) = self.hc_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!("hc_scale = {s} must be > 0")));
            }
        }
        if self.history_window == 0 {
            return Err(Error::invalid("history_window must be >= 1"));
        }
        Ok(())
    }

    /// Penalty parameters with defaults filled in for a `dim`-dimensional
    /// problem whose observations span `observed_range`.
    pub fn resolve_penalty(&self, dim: usize, observed_range: f64) -> HcPenalty {
        HcPenalty {
            distance: self.hc_distance.unwrap_or(0.05 * (dim as f64).sqrt()),
            scale: self.hc_scale.unwrap_or(10.0 * observed_range.max(1.0)),
            window: self.history_window,
        }
    }
}

/// Resolved distance-penalty parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcPenalty {
    pub distance: f64,
    pub scale: f64,
    pub window: usize,
}

/// Points issued for evaluation whose results have not arrived yet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PendingSet {
    pub points: Vec<DesignPoint>,
}

impl PendingSet {
    pub fn new(points: Vec<DesignPoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn acq_ucb(model: &GpModel, q: &DesignPoint, kappa: f64) -> f64 {
    let p = model.posterior_at(q.coords());
    p.mean + kappa * p.stddev
}

/// `μ - κσ`, the optimistic criterion when the objective is minimized.
pub fn acq_lcb(model: &GpModel, q: &DesignPoint, kappa: f64) -> f64 {
    let p = model.posterior_at(q.coords());
    p.mean - kappa * p.stddev
}

pub fn acq_ei(model: &GpModel, q: &DesignPoint, best: f64) -> f64 {
    let p = model.posterior_at(q.coords());
    expected_improvement(p.mean, p.stddev, best)
}

/// `E[max(f - best, 0)]` for `f ~ N(mean, stddev²)`.
pub fn expected_improvement(mean: f64, stddev: f64, best: f64) -> f64 {
    let gap = mean - best;
    if stddev <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / stddev;
    let cdf = 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    (gap * cdf + stddev * pdf).max(0.0)
}

pub fn acq_pbo(model: &GpModel, q: &DesignPoint, w: f64) -> f64 {
    let p = model.posterior_at(q.coords());
    weighted(p.mean, p.stddev, w)
}

#[inline]
pub fn weighted(mean: f64, stddev: f64, w: f64) -> f64 {
    (1.0 - w) * mean + w * stddev
}

/// Slot weights `w_i = i / (B-1)` for a synchronous batch of size `b`.
pub fn batch_slot_weights(b: usize) -> Vec<f64> {
    match b {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..b).map(|i| i as f64 / (b - 1) as f64).collect(),
    }
}

/// Distance penalty `N · (∏_j exp[(d / d_j)^10])^(1/window)` over the
/// slot's recent queries, `d_j` measured in unit-cube coordinates.
pub fn penalty_hc(q: &DesignPoint, history: &[DesignPoint], pen: &HcPenalty) -> f64 {
    penalty_at(q.coords(), history, pen)
}

pub(crate) fn penalty_at(q: &[f64], history: &[DesignPoint], pen: &HcPenalty) -> f64 {
    if history.is_empty() {
        return 0.0;
    }
    let mut exponent = 0.0;
    for h in history {
        let dist = euclidean(q, h.coords());
        if dist == 0.0 {
            return PENALTY_SENTINEL;
        }
        exponent += (pen.distance / dist).powi(10);
    }
    exponent /= pen.window as f64;
    if exponent >= (PENALTY_SENTINEL / pen.scale).ln() {
        return PENALTY_SENTINEL;
    }
    pen.scale * exponent.exp()
}

/// Weighted criterion minus the distance penalty. An empty history means
/// no penalty at all.
pub fn acq_phcbo(
    model: &GpModel,
    q: &DesignPoint,
    w: f64,
    history: &[DesignPoint],
    pen: &HcPenalty,
) -> f64 {
    acq_pbo(model, q, w) - penalty_hc(q, history, pen)
}

/// Draws `κ ~ U[0, λ]` and returns `w = κ/(κ+1)`.
pub fn sample_weight<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    weight_from_kappa(rng.random::<f64>() * lambda)
}

pub fn weight_from_kappa(kappa: f64) -> f64 {
    kappa / (kappa + 1.0)
}

/// The randomized-weight criterion with penalization, prepared for many
/// evaluations: the hallucinated model is built once per suggestion.
#[derive(Debug, Clone)]
pub struct EasyBoAcquisition<'a> {
    model: &'a GpModel,
    hallucinated: Option<GpModel>,
    weight: f64,
}

impl<'a> EasyBoAcquisition<'a> {
    /// `model` must be conditioned on observed data only.
    pub fn new(model: &'a GpModel, pending: &PendingSet, weight: f64) -> Result<Self> {
        let hallucinated = if pending.is_empty() {
            None
        } else {
            Some(model.hallucinate(&pending.points)?)
        };
        Ok(Self {
            model,
            hallucinated,
            weight,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn value_at(&self, q: &[f64]) -> f64 {
        let w = self.weight;
        match &self.hallucinated {
            None => {
                let p = self.model.posterior_at(q);
                weighted(p.mean, p.stddev, w)
            }
            Some(h) => {
                let mean = if w < 1.0 { self.model.mean_at(q) } else { 0.0 };
                weighted(mean, h.stddev_at(q), w)
            }
        }
    }
}

/// One-off evaluation of the penalized randomized-weight criterion.
pub fn acq_easybo(model: &GpModel, pending: &PendingSet, q: &DesignPoint, w: f64) -> Result<f64> {
    Ok(EasyBoAcquisition::new(model, pending, w)?.value_at(q.coords()))
}
