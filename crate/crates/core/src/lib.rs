//! Asynchronous batch Bayesian optimization.
//!
//! A GP surrogate ([`gp`]), acquisition functions including the
//! randomized-weight criterion with hallucination-based penalization
//! ([`acquisition`]), a derivative-free inner optimizer ([`acq_optimizer`]),
//! sequential / synchronous / asynchronous drivers over a simulated clock
//! ([`scheduler`]), synthetic benchmark problems ([`benchmarks`]) and an
//! experiment harness ([`harness`]).

pub mod acq_optimizer;
pub mod acquisition;
pub mod benchmarks;
pub mod design;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod scheduler;
pub mod seeds;

pub use domain::{BoxDomain, Dataset, DesignPoint, Standardizer};
pub use error::{Error, Result};
