//! Choice of `ε₀` and `x₀` for a Hölder level `k`.
//!
//! With `p₁ = s_k(2bε)/s_k(1)` bounding the chance an excursion reaches mass
//! 1 and `p₂ = bε/x₀` bounding below the chance it separates by `x₀`, the
//! requirements are
//!
//! ```text
//! s_k(2bε) < 3bε,   2bε < x₀ ≤ s_k(1)/6,
//! (1 − p₁)^{n+1} − (1 − 2p₁)^{n+1} ≥ (e^{−1} − e^{−2})/2,   n = ⌈1/p₁⌉,
//! ```
//!
//! and they imply `p₂/p₁ ≥ 2`.

use crate::error::{positive, Error, Result};

use super::scale::ScaleFn;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smallness {
    pub k: f64,
    pub p_prime: f64,
    pub k_const: f64,
    pub s_k_one: f64,
    /// `s_k(1)/6`.
    pub x0_bound: f64,
    pub x0: f64,
    pub eps0: f64,
    pub p1: f64,
    pub p2: f64,
    pub n: u64,
    /// `(1 − p₁)^{n+1} − (1 − 2p₁)^{n+1}`.
    pub separation_lower: f64,
    pub target: f64,
    /// Every requirement above holds at `eps0`.
    pub holds: bool,
}

impl Smallness {
    pub fn ratio(&self) -> f64 {
        self.p2 / self.p1
    }
}

/// `(e^{−1} − e^{−2})/2`.
pub fn separation_target() -> f64 {
    0.5 * ((-1f64).exp() - (-2f64).exp())
}

/// Halves `ε` from just below `x₀/(2b)` until every requirement holds, with
/// `x₀ = s_k(1)/6`.
pub fn smallness_chain(b: f64, p: f64, k: f64) -> Result<Smallness> {
    positive("b", b)?;
    let s = ScaleFn::for_mass(b, p, k)?;
    let s1 = s.eval(1.0)?;
    let x0 = s1 / 6.0;
    let target = separation_target();
    let mut eps = 0.999 * x0 / (2.0 * b);
    for _ in 0..200 {
        let s2 = s.eval(2.0 * b * eps)?;
        let p1 = s2 / s1;
        let p2 = b * eps / x0;
        let n = (1.0 / p1).ceil();
        let lower = (1.0 - p1).powf(n + 1.0) - (1.0 - 2.0 * p1).powf(n + 1.0);
        let holds = s2 < 3.0 * b * eps && 2.0 * b * eps < x0 && lower >= target && p2 / p1 >= 2.0;
        if holds {
            return Ok(Smallness {
                k,
                p_prime: s.q,
                k_const: s.k,
                s_k_one: s1,
                x0_bound: x0,
                x0,
                eps0: eps,
                p1,
                p2,
                n: n as u64,
                separation_lower: lower,
                target,
                holds,
            });
        }
        eps *= 0.5;
    }
    Err(Error::Domain(format!("no admissible ε found for k = {k}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_for_k8() {
        let c = smallness_chain(1.0, 0.25, 8.0).unwrap();
        assert!(c.holds);
        assert!((c.p_prime - 0.45).abs() < 1e-15);
        assert!((c.k_const - 16f64.powi(-4)).abs() < 1e-20);
        assert!(c.s_k_one > 0.0 && c.s_k_one < 1e-50);
        assert!(c.ratio() >= 2.0);
        assert!(c.separation_lower >= c.target);
        assert!(2.0 * c.eps0 < c.x0 && c.x0 <= c.s_k_one / 6.0);
    }

    #[test]
    fn larger_k_gives_smaller_scale() {
        let a = smallness_chain(1.0, 0.25, 8.0).unwrap();
        let b = smallness_chain(1.0, 0.25, 16.0).unwrap();
        assert!(b.s_k_one < a.s_k_one);
        assert!(b.eps0 < a.eps0);
    }
}
