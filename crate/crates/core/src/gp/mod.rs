//! Gaussian process regression with a squared-exponential ARD kernel.
//!
//! Inputs live in the unit cube and outputs are standardized before any
//! kernel algebra; [`Posterior`] values come back in original units.

mod fit;
mod kernel;
mod lbfgs;
mod model;

pub use fit::{FitConfig, LogMarginalLikelihood};
pub use kernel::{kernel_se, KernelHyperparams, NOISE_FLOOR};
pub use model::{GpModel, Posterior, JITTER_GROWTH, JITTER_RETRIES, JITTER_START};
