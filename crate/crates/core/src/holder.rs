//! The Hölder-class integral inequality
//!
//! ```text
//! ∫ f^α ≥ K(β, C) (∫ f)^{(αβ + 1)/(β + 1)}
//! ```
//!
//! for nonnegative `f` with `|f(x) − f(y)| ≤ C|x − y|^β`, together with a
//! generator of certified test functions and the empirical Hölder-constant
//! estimator used to monitor SPDE fields.

use crate::error::{open_interval, positive, Error, Result};
use crate::noise::{streams, SeedSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderClass {
    pub beta: f64,
    pub c: f64,
}

impl HolderClass {
    pub fn new(beta: f64, c: f64) -> Result<Self> {
        open_interval("beta", beta, 0.0, 1.0)?;
        positive("C", c)?;
        Ok(Self { beta, c })
    }

    pub fn ral_constant(&self) -> f64 {
        (2.0 * self.c).powf(-1.0 / self.beta).min(1.0)
    }
}

/// `K(β, C) = min(1, (2C)^{−1/β})`.
///
/// If `sup f < 1` then `∫f^α ≥ ∫f` and the normalised integral is 1.
/// Otherwise `f ≥ 1/2` on an interval of half-length `(2C)^{−1/β}` around a
/// near-maximiser, so `∫f^α ≥ (2C)^{−1/β}`.
pub fn ral_constant(beta: f64, c: f64) -> Result<f64> {
    Ok(HolderClass::new(beta, c)?.ral_constant())
}

/// `(αβ + 1)/(β + 1)`.
pub fn ral_exponent(alpha: f64, beta: f64) -> f64 {
    (alpha * beta + 1.0) / (beta + 1.0)
}

/// Nonnegative samples on the uniform grid `x0 + i·dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub class: Option<HolderClass>,
}

impl SampledFn {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        positive("dx", dx)?;
        if values.is_empty() {
            return Err(Error::Empty("sampled function"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Contract(format!("sample {v} is not a nonnegative number")));
        }
        Ok(Self {
            x0,
            dx,
            values,
            class: None,
        })
    }

    /// Samples `f` at `n` points spanning `[lo, hi]`.
    pub fn sample(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::param("grid", format!("need n ≥ 2 and lo < hi, got n={n}, [{lo}, {hi}]")));
        }
        let dx = (hi - lo) / (n - 1) as f64;
        Self::new(lo, dx, (0..n).map(|i| f(lo + i as f64 * dx)).collect())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Attaches `class` after confirming the grid-pair quotients stay below `C`.
    pub fn certify(mut self, class: HolderClass) -> Result<Self> {
        let est = holder_constant_estimate(&self, class.beta)?;
        if est > class.c * (1.0 + 1e-12) {
            return Err(Error::Contract(format!(
                "pair scan found Hölder-{} quotient {est} > C = {}",
                class.beta, class.c
            )));
        }
        self.class = Some(class);
        Ok(self)
    }

    /// Composite trapezoid rule.
    pub fn integral(&self) -> f64 {
        trapezoid(self.values.iter().copied(), self.dx)
    }

    pub fn integral_pow(&self, alpha: f64) -> f64 {
        trapezoid(self.values.iter().map(|v| v.powf(alpha)), self.dx)
    }

    /// `g(x) = b^{−β} f(bx)` with `b = (∫f)^{1/(β+1)}`, so that `∫g = 1` and
    /// `g` stays in the same Hölder class. Returns `None` for the zero function.
    pub fn scale_reduce(&self) -> Result<Option<SampledFn>> {
        let class = self
            .class
            .ok_or_else(|| Error::Contract("scale reduction needs a certified function".into()))?;
        let mass = self.integral();
        if mass <= 0.0 {
            return Ok(None);
        }
        let b = mass.powf(1.0 / (class.beta + 1.0));
        let factor = b.powf(-class.beta);
        Ok(Some(SampledFn {
            x0: self.x0 / b,
            dx: self.dx / b,
            values: self.values.iter().map(|v| v * factor).collect(),
            class: Some(class),
        }))
    }
}

fn trapezoid(values: impl ExactSizeIterator<Item = f64>, dx: f64) -> f64 {
    let n = values.len();
    let mut sum = 0.0;
    for (i, v) in values.enumerate() {
        sum += if i == 0 || i + 1 == n { 0.5 * v } else { v };
    }
    sum * dx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RalCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs ≥ rhs·(1 − tol)`.
    pub holds: bool,
    /// `lhs ≥ rhs` with no allowance.
    pub strict: bool,
    pub tol: f64,
}

impl RalCheck {
    /// `lhs / rhs`, infinite when the right side vanishes.
    pub fn ratio(&self) -> f64 {
        if self.rhs > 0.0 {
            self.lhs / self.rhs
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates both sides of the inequality by trapezoid quadrature.
///
/// The relative allowance is ten times the largest jump of `f^α` between
/// neighbouring samples over `sup f^α`, capped at 0.1. Both numerator and
/// denominator scale the same way under the rescaling `b^{−β}f(b·)`, so the
/// outcome is invariant under [`SampledFn::scale_reduce`].
pub fn ral_check(f: &SampledFn, alpha: f64) -> Result<RalCheck> {
    let class = f
        .class
        .ok_or_else(|| Error::Contract("ral_check needs a certified Hölder class".into()))?;
    open_interval("alpha", alpha, 0.0, 1.0)?;
    let lhs = f.integral_pow(alpha);
    let rhs = class.ral_constant() * f.integral().powf(ral_exponent(alpha, class.beta));
    let mut max_jump = 0.0f64;
    let mut sup = 0.0f64;
    let mut prev = f.values[0].powf(alpha);
    for v in &f.values {
        let cur = v.powf(alpha);
        max_jump = max_jump.max((cur - prev).abs());
        sup = sup.max(cur);
        prev = cur;
    }
    let tol = if sup > 0.0 {
        (10.0 * max_jump / sup).min(0.1)
    } else {
        0.0
    };
    Ok(RalCheck {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - tol),
        strict: lhs >= rhs,
        tol,
    })
}

/// Random nonnegative function supported in `[−W, W]` and certified in `class`.
///
/// A random trigonometric sum `m + Σ a_k cos(ω_k x + φ_k)` with
/// `Σ|a_k| 2^{1−β} ω_k^β = C/2` has Hölder-β seminorm at most `C/2`. It is
/// capped by the envelope `(C/2)(W − |x|)_+^β`, which has the same seminorm
/// bound, rectified at 0 and multiplied by a random amplitude in `(0, 1]`.
/// Sampled at 1024 points over `[−1.25W, 1.25W]` and re-certified by pair scan.
pub fn generate_holder_fn(seed: SeedSpec, class: HolderClass, support_halfwidth: f64) -> Result<SampledFn> {
    HolderClass::new(class.beta, class.c)?;
    positive("support_halfwidth", support_halfwidth)?;
    let w = support_halfwidth;
    let beta = class.beta;
    let n = 1024;
    let lo = -1.25 * w;
    let dx = 2.5 * w / (n - 1) as f64;

    let mut rng = seed.with_stream(streams::GENERATOR).normals();
    let terms = 1 + (rng.uniform() * 8.0) as usize;
    // Frequencies up to a quarter of the grid Nyquist rate.
    let (w_min, w_max) = (0.5 / w, std::f64::consts::PI / (4.0 * dx));
    let mut modes = Vec::with_capacity(terms);
    let mut seminorm = 0.0;
    for _ in 0..terms {
        let omega = w_min * (w_max / w_min).powf(rng.uniform());
        let raw = 0.05 + rng.uniform();
        let phase = std::f64::consts::TAU * rng.uniform();
        seminorm += raw * 2f64.powf(1.0 - beta) * omega.powf(beta);
        modes.push((raw, omega, phase));
    }
    let scale = 0.5 * class.c / seminorm;
    let total_amp: f64 = modes.iter().map(|m| m.0 * scale).sum();
    let offset = total_amp * (2.0 * rng.uniform() - 0.6);
    let amplitude = 1.0 - rng.uniform();

    let values = (0..n)
        .map(|i| {
            let x = lo + i as f64 * dx;
            let g = offset
                + modes
                    .iter()
                    .map(|&(a, om, ph)| a * scale * (om * x + ph).cos())
                    .sum::<f64>();
            let env = 0.5 * class.c * (w - x.abs()).max(0.0).powf(beta);
            amplitude * g.min(env).max(0.0)
        })
        .collect();
    SampledFn::new(lo, dx, values)?.certify(class)
}

/// Which grid lags the pair scan visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSchedule {
    /// Every pair when there are at most 2048 samples, otherwise [`PairSchedule::Banded`].
    Auto,
    /// Every lag up to 64 plus every power-of-two lag.
    Banded,
}

const EXHAUSTIVE_LIMIT: usize = 2048;
const BAND: usize = 64;

/// `max |f(x) − f(x′)|/|x − x′|^β` over grid pairs.
pub fn holder_constant_estimate(f: &SampledFn, beta: f64) -> Result<f64> {
    open_interval("beta", beta, 0.0, 1.0)?;
    Ok(holder_quotient(&f.values, f.dx, beta, PairSchedule::Auto))
}

/// Pair-scan quotient of raw samples with spacing `dx`.
pub fn holder_quotient(values: &[f64], dx: f64, beta: f64, schedule: PairSchedule) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let exhaustive = schedule == PairSchedule::Auto && n <= EXHAUSTIVE_LIMIT;
    let mut best = 0.0f64;
    let mut scan = |lag: usize| {
        let inv = (lag as f64 * dx).powf(-beta);
        let mut m = 0.0f64;
        for (a, b) in values.iter().zip(&values[lag..]) {
            m = m.max((a - b).abs());
        }
        best = best.max(m * inv);
    };
    if exhaustive {
        (1..n).for_each(&mut scan);
    } else {
        (1..=BAND.min(n - 1)).for_each(&mut scan);
        let mut lag = 2 * BAND;
        while lag < n {
            scan(lag);
            lag *= 2;
        }
    }
    best
}
