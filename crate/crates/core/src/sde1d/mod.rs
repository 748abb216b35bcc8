//! The sticky diffusion `dX = b dt + X^p dB`, `X ≥ 0`, and its relatives.
//!
//! - [`scale`]: scale function, speed measure and a fast inverse table.
//! - [`sticky`]: exact simulation as a time-changed reflecting Brownian motion
//!   in natural scale, and an Euler scheme.
//! - [`girsanov`]: survival of the driftless diffusion `dY = Y^q dB`.
//! - [`tau`]: the time change that turns the SPDE mass into a power-law diffusion.
//! - [`smallness`]: the numeric chain fixing `ε₀` and `x₀` for a Hölder level `k`.

pub mod girsanov;
pub mod scale;
pub mod smallness;
pub mod sticky;
pub mod tau;

pub use girsanov::{absorption_time, girsanov_survival, survival_exact, GirsanovConfig, GirsanovResult};
pub use scale::{ScaleFn, ScaleTable, SpeedMeasure};
pub use smallness::{smallness_chain, Smallness};
pub use sticky::{simulate_sde_euler, simulate_sticky_exact, PathSummary, StickyOptions};
pub use tau::{time_change_tau, TauPath};
