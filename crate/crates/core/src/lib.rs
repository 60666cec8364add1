//! Effective capacity (EC) of K-user uplink networks under orthogonal (OMA),
//! non-orthogonal (NOMA) and adaptive NOMA-Relevant (NOMA-R) multiple access.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] draws ordered Rayleigh power gains and exposes the two-user
//!   order-statistic densities.
//! * [`rate_model`] turns one gain realization into per-user rates and runs the
//!   NOMA-R cluster selection.
//! * [`specfun`] holds the special functions and the adaptive quadrature the
//!   analytical evaluators rely on.
//! * [`closed_form`] evaluates the two-user analytical expressions (NOMA
//!   selection probability, weak/strong user EC, high-SNR asymptote).
//! * [`monte_carlo`] estimates the same quantities by simulation for any K.
//! * [`harness`] ingests configurations, runs sweeps and writes CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod closed_form;
mod error;
pub mod harness;
pub mod monte_carlo;
pub mod rate_model;
pub mod specfun;

pub use channel::{GainSample, RngSeed};
pub use closed_form::{Strategy, StrategyModel, TwoUserParams, Variant};
pub use error::{Error, Result};
pub use monte_carlo::{EcEstimate, TauEstimate};
pub use rate_model::{ClusterAssignment, NetworkConfig, RateVector};
pub use specfun::QuadratureSpec;

/// Converts a value in decibels to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to decibels.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Negative QoS exponent from the physical QoS exponent `theta` (1/bit), the
/// frame duration `t_f` (s) and the bandwidth `bandwidth` (Hz):
/// `beta = -theta * t_f * B / ln 2`.
pub fn beta_from_theta(theta: f64, t_f: f64, bandwidth: f64) -> f64 {
    -theta * t_f * bandwidth / std::f64::consts::LN_2
}
