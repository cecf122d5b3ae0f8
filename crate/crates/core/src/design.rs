//! Space-filling and random point sets in the unit cube.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::DesignPoint;
use crate::error::{Error, Result};
use crate::seeds;

/// Largest dimension the Sobol generator supports.
pub const SOBOL_MAX_DIM: usize = sobol_burley::NUM_DIMENSIONS as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialDesign {
    /// Owen-scrambled Sobol points.
    #[default]
    Sobol,
    /// Independent uniform draws.
    Uniform,
}

impl InitialDesign {
    pub fn generate(self, n: usize, dim: usize, seed: u64) -> Result<Vec<DesignPoint>> {
        match self {
            InitialDesign::Sobol => sobol_points(n, dim, seed),
            InitialDesign::Uniform => {
                let mut rng = seeds::rng(seed);
                Ok((0..n)
                    .map(|_| DesignPoint::clamped((0..dim).map(|_| rng.random()).collect()))
                    .collect())
            }
        }
    }
}

/// The first `n` points of a scrambled Sobol sequence, scramble keyed by
/// `seed`.
pub fn sobol_points(n: usize, dim: usize, seed: u64) -> Result<Vec<DesignPoint>> {
    if dim == 0 || dim > SOBOL_MAX_DIM {
        return Err(Error::invalid(format!(
            "Sobol points need 1..={SOBOL_MAX_DIM} dimensions, got {dim}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("too many Sobol points requested"));
    }
    let scramble = (seed ^ (seed >> 32)) as u32;
    Ok((0..n as u32)
        .map(|i| {
            DesignPoint::clamped(
                (0..dim as u32)
                    .map(|j| f64::from(sobol_burley::sample(i, j, scramble)))
                    .collect(),
            )
        })
        .collect())
}
