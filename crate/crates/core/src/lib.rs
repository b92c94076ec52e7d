//! Maximum-likelihood amplitude estimation without phase estimation.
//!
//! The estimator measures the amplified states `Q^{m_k} A|0>` for a schedule of
//! amplification depths `m_k`, combines the per-depth binomial likelihoods into a
//! single likelihood over the angle `theta` (with `a = sin^2(theta)`), and takes
//! its global maximiser.
//!
//! Modules:
//!
//! - [`amplified_model`]: amplitudes, schedules and simulated measurement counts.
//! - [`mle`]: combined log-likelihood and the staged grid search for its maximum.
//! - [`statistics`]: Fisher information, query counts, Cramér–Rao bounds and
//!   log-log slope fits.
//! - [`montecarlo`]: a dense statevector realisation of the sine-integral
//!   Monte Carlo instance.
//! - [`conventional`]: the deterministic error model of phase-estimation based
//!   amplitude estimation.
//! - [`experiments`]: sweeps, aggregation and CSV/SVG emission.
//!
//! Data-parallel loops go through [`exec::Execution`]. With the `parallel`
//! feature (on by default) they run on rayon; otherwise, or with
//! [`exec::Execution::Serial`], they run sequentially. Results are identical
//! either way.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod amplified_model;
pub mod conventional;
mod error;
pub mod exec;
pub mod experiments;
pub mod mle;
pub mod montecarlo;
pub mod rng;
pub mod statistics;

pub use amplified_model::{
    good_probability, make_schedule, sample_counts, Amplitude, MeasurementData, Schedule,
    ScheduleKind,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use mle::{log_likelihood, ml_estimate, MLConfig, MLResult};
pub use statistics::{
    cramer_rao_error, fisher_information, fisher_oracle, fit_error_exponent, query_count,
    BoundReport, SlopeFit,
};
