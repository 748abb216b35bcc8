//! Survival of `dY = Y^q dB` absorbed at 0.
//!
//! `Z = Y^{1−q}/(1−q)` is a Bessel process of dimension `(1−2q)/(1−q) < 1`,
//! so `P(T₀ > T) = P(ν, z²/(2T))` with `ν = 1/(2(1−q))` and `P` the
//! regularised lower incomplete gamma function. It decays like `T^{−ν}`.

use crate::error::{open_interval, positive, Error, Result};
use crate::noise::{streams, SeedSpec};
use crate::quad::integrate;
use crate::stats::{loglog_slope, wilson, MCResult, Slope};

#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovConfig {
    pub q: f64,
    pub y0: f64,
    pub t_list: Vec<f64>,
    /// Relative step size: `h = η Y^{2−2q}`.
    pub eta: f64,
    /// Paths below this level count as absorbed.
    pub y_floor: f64,
}

impl GirsanovConfig {
    pub fn new(q: f64, y0: f64, t_list: Vec<f64>) -> Self {
        Self {
            q,
            y0,
            t_list,
            eta: 0.01,
            y_floor: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        open_interval("q", self.q, 0.0, 0.5)?;
        positive("y0", self.y0)?;
        open_interval("eta", self.eta, 0.0, 1.0)?;
        positive("y_floor", self.y_floor)?;
        if self.t_list.is_empty() {
            return Err(Error::Empty("survival horizons"));
        }
        for &t in &self.t_list {
            positive("T", t)?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.t_list.iter().copied().fold(0.0, f64::max)
    }
}

/// Absorption time of one Euler path with step `η Y^{2−2q}`, or `None` if
/// the path survives past `horizon`. Draws from `seed` as given.
pub fn absorption_time(seed: SeedSpec, q: f64, y0: f64, horizon: f64, eta: f64, y_floor: f64) -> Option<f64> {
    let mut normals = seed.normals();
    let (mut y, mut t) = (y0, 0.0);
    let power = 2.0 - 2.0 * q;
    while t < horizon {
        if y <= y_floor {
            return Some(t);
        }
        let h = (eta * y.powf(power)).min(horizon - t);
        y += y.powf(q) * h.sqrt() * normals.normal();
        t += h;
    }
    if y <= y_floor {
        Some(t)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirsanovResult {
    /// `(T, P̂(T₀ > T))` with Wilson intervals.
    pub survival: Vec<(f64, MCResult)>,
    pub slope: Slope,
    /// Absorption times, `f64::INFINITY` when censored.
    pub times: Vec<f64>,
}

/// Survival estimates from a sample of absorption times.
pub fn survival_from_times(times: &[f64], t_list: &[f64]) -> Result<GirsanovResult> {
    let n = times.len() as u64;
    let survival = t_list
        .iter()
        .map(|&t| Ok((t, wilson(times.iter().filter(|&&x| x > t).count() as u64, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = survival.iter().map(|(t, r)| (*t, r.mean)).collect();
    Ok(GirsanovResult {
        slope: loglog_slope(&pairs)?,
        survival,
        times: times.to_vec(),
    })
}

/// `n_paths` Euler paths from `y0`, replicate `i` keyed by `seed.replicate(i)`.
pub fn girsanov_survival(seed: SeedSpec, cfg: &GirsanovConfig, n_paths: u64) -> Result<GirsanovResult> {
    cfg.validate()?;
    let horizon = cfg.horizon();
    let times: Vec<f64> = (0..n_paths)
        .map(|i| {
            absorption_time(seed.replicate(i).with_stream(streams::PATH), cfg.q, cfg.y0, horizon, cfg.eta, cfg.y_floor)
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    survival_from_times(&times, &cfg.t_list)
}

/// `P(T₀ > T)` from the Bessel representation, evaluated by quadrature of
/// the gamma density.
pub fn survival_exact(q: f64, y0: f64, t: f64) -> Result<f64> {
    open_interval("q", q, 0.0, 0.5)?;
    positive("y0", y0)?;
    positive("T", t)?;
    let nu = 1.0 / (2.0 * (1.0 - q));
    let z = y0.powf(1.0 - q) / (1.0 - q);
    let x = z * z / (2.0 * t);
    let lg = libm::lgamma(nu);
    // Substitute u = v^{1/ν} to remove the endpoint singularity of u^{ν−1}.
    let smooth = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let u = v.powf(1.0 / nu);
        (-u - lg).exp() / nu
    };
    integrate(smooth, 0.0, x.powf(nu), 1e-14)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_survival_limits() {
        let s4 = survival_exact(0.25, 1.0, 4.0).unwrap();
        let s256 = survival_exact(0.25, 1.0, 256.0).unwrap();
        assert!(s4 > s256 && s4 < 1.0 && s256 > 0.0);
        // Small-x expansion: P(ν, x) ≈ x^ν/Γ(ν+1).
        let x: f64 = (4.0 / 3.0f64).powi(2) / (2.0 * 1e6);
        let approx = x.powf(2.0 / 3.0) / libm::tgamma(5.0 / 3.0);
        assert!((survival_exact(0.25, 1.0, 1e6).unwrap() / approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn absorbed_paths_have_finite_time() {
        let mut absorbed = 0;
        for i in 0..200 {
            if let Some(t) = absorption_time(SeedSpec::new(1, i, 0), 0.25, 1.0, 16.0, 0.01, 1e-8) {
                assert!(t > 0.0 && t <= 16.0);
                absorbed += 1;
            }
        }
        assert!(absorbed > 100);
    }

    #[test]
    fn survival_is_nonincreasing() {
        let cfg = GirsanovConfig::new(0.25, 1.0, vec![4.0, 16.0, 64.0]);
        let r = girsanov_survival(SeedSpec::new(2, 0, 0), &cfg, 300).unwrap();
        for w in r.survival.windows(2) {
            assert!(w[1].1.mean <= w[0].1.mean);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = GirsanovConfig::new(0.25, 1.0, vec![]);
        assert!(cfg.validate().is_err());
        cfg.t_list = vec![1.0];
        cfg.y0 = 0.0;
        assert!(cfg.validate().is_err());
    }
}
