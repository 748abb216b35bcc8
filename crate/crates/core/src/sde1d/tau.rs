//! The time change `τ = A⁻¹` with
//!
//! ```text
//! A(u) = ∫₀^u ⟨N⟩'_s / (K M_s^{2p'}) ds,
//! ```
//!
//! where `M` is the total mass and `⟨N⟩'` the rate of quadratic variation of
//! its martingale part. On the `τ` clock the mass has quadratic variation
//! rate `K M^{2p'}`. While `M = 0` the integrand is taken to be 1, so the two
//! clocks run together.

use crate::error::{positive, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TauPath {
    /// `A(u_i)` at the input grid points `u_i = i·du`.
    pub a: Vec<f64>,
    /// `τ'` on step `i`, equal to `1/A'`.
    pub tau_prime: Vec<f64>,
    pub mass: Vec<f64>,
    pub du: f64,
}

impl TauPath {
    pub fn max_tau_prime(&self) -> f64 {
        self.tau_prime.iter().copied().fold(0.0, f64::max)
    }

    /// `A(u_end)`, the length of the new clock.
    pub fn horizon(&self) -> f64 {
        *self.a.last().unwrap_or(&0.0)
    }

    /// `u = τ(t)` by monotone linear interpolation of `A`.
    pub fn tau(&self, t: f64) -> f64 {
        let j = self.a.partition_point(|&v| v <= t);
        if j == 0 {
            return 0.0;
        }
        if j >= self.a.len() {
            return (self.a.len() - 1) as f64 * self.du;
        }
        let (a0, a1) = (self.a[j - 1], self.a[j]);
        let frac = if a1 > a0 { (t - a0) / (a1 - a0) } else { 0.0 };
        (j - 1) as f64 * self.du + frac * self.du
    }

    /// Mass on the `τ` clock at the times `t_grid`.
    pub fn resample(&self, t_grid: &[f64]) -> Vec<f64> {
        t_grid
            .iter()
            .map(|&t| {
                let u = self.tau(t) / self.du;
                let i = (u.floor() as usize).min(self.mass.len() - 1);
                if i + 1 >= self.mass.len() {
                    return self.mass[i];
                }
                let f = u - i as f64;
                self.mass[i] * (1.0 - f) + self.mass[i + 1] * f
            })
            .collect()
    }
}

/// Builds `A` from a mass path sampled every `du` and the per-step
/// quadratic-variation rates `qv_rate[i]` on `[u_i, u_{i+1})`.
pub fn time_change_tau(mass: &[f64], qv_rate: &[f64], du: f64, k: f64, p_prime: f64) -> Result<TauPath> {
    positive("du", du)?;
    positive("K", k)?;
    positive("p_prime", p_prime)?;
    if mass.is_empty() {
        return Err(Error::Empty("mass path"));
    }
    if qv_rate.len() + 1 != mass.len() {
        return Err(Error::Contract(format!(
            "{} rates for {} mass samples, expected one fewer",
            qv_rate.len(),
            mass.len()
        )));
    }
    let mut a = Vec::with_capacity(mass.len());
    let mut tau_prime = Vec::with_capacity(qv_rate.len());
    a.push(0.0);
    let mut acc = 0.0;
    for (i, &q) in qv_rate.iter().enumerate() {
        let m = mass[i];
        let rate = if m > 0.0 {
            if q <= 0.0 {
                return Err(Error::Domain(format!("positive mass {m} with zero quadratic variation at step {i}")));
            }
            q / (k * m.powf(2.0 * p_prime))
        } else {
            1.0
        };
        acc += rate * du;
        a.push(acc);
        tau_prime.push(1.0 / rate);
    }
    Ok(TauPath {
        a,
        tau_prime,
        mass: mass.to_vec(),
        du,
    })
}
