//! Delay statistics of downlink Poisson cellular networks.
//!
//! The library evaluates, for a typical user served by its nearest base
//! station under Rayleigh fading:
//!
//! - the **local delay** (mean slots until first successful delivery),
//! - three delay-distribution metrics: **F1** (mean CCDF of the slot count),
//!   **F2** (CCDF of the conditional mean slot count), and **F3** (CCDF of
//!   the conditional CCDF),
//! - the asymptotic **packet-loss probability**,
//!
//! under SIR, SINR, and SIR+ASNR coverage criteria, pairing exact analytical
//! formulas ([`analytic`]) with production approximations ([`approx`]:
//! Euler-sum transform inversion, Beta moment matching, Riemann bridge) and
//! an independent Monte Carlo simulator ([`mcsim`]) for cross-validation.
//!
//! All physical inputs are linear SI units; dB conversions live in
//! [`model`].

pub mod analytic;
pub mod approx;
pub mod error;
pub mod mcsim;
pub mod model;
pub mod special;

pub use analytic::{DelayQuery, ExtendedReal};
pub use error::{Error, Result};
pub use model::{CoverageCriterion, NetworkParams, NetworkRealization};
