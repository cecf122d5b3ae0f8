//! Search-space types: the box domain, normalized design points and the
//! observed dataset.
//!
//! Everything downstream of the problem definition (kernels, acquisition,
//! inner optimization) works in the unit cube. [`BoxDomain`] owns the affine
//! map between the user's coordinates and `[0, 1]^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in the problem's own coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::invalid("domain must have at least one dimension"));
        }
        if lower.len() != upper.len() {
            return Err(Error::invalid(format!(
                "lower has {} bounds but upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "bound {i} is not a finite interval with lower < upper: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit cube `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Maps a point given in domain coordinates into the unit cube.
    /// Points outside the box are rejected.
    pub fn normalize(&self, x: &[f64]) -> Result<DesignPoint> {
        self.check_dim(x.len())?;
        let coords = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (v - lo) / (hi - lo))
            .collect();
        DesignPoint::new(coords)
    }

    pub fn denormalize(&self, p: &DesignPoint) -> Vec<f64> {
        debug_assert_eq!(p.dim(), self.dim());
        p.coords()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&u, (&lo, &hi))| lo + u * (hi - lo))
            .collect()
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::invalid(format!(
                "point has dimension {d}, domain has {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A point of the unit cube, i.e. a design after normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignPoint(Vec<f64>);

impl DesignPoint {
    /// Builds a point, rejecting coordinates outside `[0, 1]`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid(
                "design point must have at least one coordinate",
            ));
        }
        // tolerate rounding from the affine map
        const SLACK: f64 = 1e-12;
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= -SLACK && **v <= 1.0 + SLACK))
        {
            return Err(Error::invalid(format!(
                "coordinate {i} = {v} lies outside the unit cube"
            )));
        }
        Ok(Self(
            coords.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        ))
    }

    /// Builds a point by clamping every coordinate into `[0, 1]`.
    /// Non-finite coordinates map to 0.5.
    pub fn clamped(coords: Vec<f64>) -> Self {
        Self(
            coords
                .into_iter()
                .map(|v| {
                    if v.is_finite() {
                        v.clamp(0.0, 1.0)
                    } else {
                        0.5
                    }
                })
                .collect(),
        )
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean distance in unit-cube coordinates.
    pub fn distance(&self, other: &DesignPoint) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Observed inputs `X` and their scalar observations `y`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<DesignPoint>,
    observations: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(inputs: Vec<DesignPoint>, observations: Vec<f64>) -> Result<Self> {
        if inputs.len() != observations.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} observations",
                inputs.len(),
                observations.len()
            )));
        }
        let mut data = Self::new();
        for (x, y) in inputs.into_iter().zip(observations) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: DesignPoint, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::invalid(format!("observation {y} is not finite")));
        }
        if let Some(first) = self.inputs.first() {
            if first.dim() != x.dim() {
                return Err(Error::invalid(format!(
                    "point has dimension {}, dataset has {}",
                    x.dim(),
                    first.dim()
                )));
            }
        }
        self.inputs.push(x);
        self.observations.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(DesignPoint::dim)
    }

    pub fn inputs(&self) -> &[DesignPoint] {
        &self.inputs
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    /// Largest observation, `None` when empty.
    pub fn best(&self) -> Option<f64> {
        self.observations.iter().copied().reduce(f64::max)
    }

    /// `max - min` of the observations (0 when empty).
    pub fn range(&self) -> f64 {
        match (
            self.observations.iter().copied().reduce(f64::min),
            self.best(),
        ) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

/// Affine output transform `z = (y - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    /// Spreads below this are treated as constant data.
    pub const SCALE_FLOOR: f64 = 1e-12;

    /// Mean and population standard deviation of `ys`. Constant (or empty)
    /// data gets unit scale so the prior keeps its variance.
    pub fn fit(ys: &[f64]) -> Self {
        if ys.is_empty() {
            return Self {
                mean: 0.0,
                scale: 1.0,
            };
        }
        let n = ys.len() as f64;
        let mean = ys.iter().sum::<f64>() / n;
        let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        Self {
            mean,
            scale: if sd > Self::SCALE_FLOOR { sd } else { 1.0 },
        }
    }

    pub fn apply(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn domain_rejects_bad_bounds() {
        assert!(BoxDomain::new(vec![], vec![]).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![f64::NEG_INFINITY], vec![0.0]).is_err());
    }

    #[test]
    fn normalize_maps_corners() {
        let d = BoxDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
        assert_eq!(d.normalize(&[-5.0, 15.0]).unwrap().coords(), &[0.0, 1.0]);
        assert_eq!(d.normalize(&[2.5, 7.5]).unwrap().coords(), &[0.5, 0.5]);
        assert!(d.normalize(&[11.0, 0.0]).is_err());
        assert!(d.normalize(&[0.0]).is_err());
    }

    #[test]
    fn dataset_rejects_non_finite_and_mismatched() {
        let mut data = Dataset::new();
        data.push(DesignPoint::new(vec![0.1, 0.2]).unwrap(), 1.0)
            .unwrap();
        assert!(data
            .push(DesignPoint::new(vec![0.1]).unwrap(), 1.0)
            .is_err());
        assert!(data
            .push(DesignPoint::new(vec![0.1, 0.2]).unwrap(), f64::NAN)
            .is_err());
        assert_eq!(data.len(), 1);
    }

    #[test]
    fn constant_data_gets_unit_scale() {
        let s = Standardizer::fit(&[3.0, 3.0, 3.0]);
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.scale, 1.0);
    }

    proptest! {
        #[test]
        fn standardize_round_trip(ys in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = Standardizer::fit(&ys);
            for &y in &ys {
                let back = s.invert(s.apply(y));
                prop_assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }

        #[test]
        fn normalize_round_trip(u in prop::collection::vec(0.0f64..=1.0, 3)) {
            let d = BoxDomain::new(vec![-2.0, 0.0, 100.0], vec![3.0, 1e-3, 250.0]).unwrap();
            let p = DesignPoint::new(u).unwrap();
            let x = d.denormalize(&p);
            let q = d.normalize(&x).unwrap();
            prop_assert!(p.distance(&q) < 1e-12);
        }
    }
}
