//! Numerical laboratory for the stochastic heat equation
//!
//! ```text
//! ∂X/∂t = ΔX/2 + X^p Ẇ + ψ,   0 < p < 1/2,
//! ```
//!
//! its coupled excursion construction, the Hölder-class integral inequality
//! that drives the construction's time change, and the one-dimensional
//! sticky diffusion `dX = b dt + X^p dB` described by a scale function and a
//! speed measure with an atom at zero.
//!
//! Modules map onto the subsystems:
//!
//! - [`noise`]: counter-based white noise, reflecting Brownian motion and its
//!   discrete local time.
//! - [`holder`]: the integral inequality, its explicit constant, certified
//!   Hölder test functions and the empirical Hölder-constant estimator.
//! - [`heat`]: grid, discrete heat semigroup, deterministic ramp and the
//!   explicit SPDE step.
//! - [`coupling`]: the alternating excursion pair `(X^ε, Y^ε)` and the signed
//!   excursion variant.
//! - [`sde1d`]: scale function, speed measure, exact and Euler simulators,
//!   Girsanov survival and the mass time change.
//! - [`stats`]: Monte Carlo aggregation.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod heat;
pub mod holder;
pub mod noise;
pub mod quad;
pub mod sde1d;
pub mod stats;

pub use error::{Error, Result};

/// Exponent `p' = (p + 2)/5` obtained by applying the Hölder-class inequality
/// with `(α, β) = (2p, 1/4)` to the quadratic variation of the mass.
pub fn derived_exponent(p: f64) -> f64 {
    (p + 2.0) / 5.0
}
