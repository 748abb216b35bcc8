use crate::error::{open_interval, positive, Error, Result};
use crate::holder::ral_constant;
use crate::quad::{bracketed_newton, integrate};

/// Scale function of `dX = b dt + √K X^q dB` on `[0, ∞)`:
///
/// ```text
/// s(x) = ∫₀^x exp(−2b y^{1−2q} / (K(1−2q))) dy
/// ```
///
/// `K = 1` is the sticky SDE itself, `K = K(k)` with `q = p'` the comparison
/// diffusion for the total mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFn {
    pub b: f64,
    pub q: f64,
    pub k: f64,
}

impl ScaleFn {
    pub fn new(b: f64, q: f64, k: f64) -> Result<Self> {
        positive("b", b)?;
        open_interval("q", q, 0.0, 0.5)?;
        positive("K", k)?;
        Ok(Self { b, q, k })
    }

    /// `s_k` for the total mass of the SPDE with exponent `p`: `q = (p+2)/5`
    /// and `K = K(1/4, k)`.
    pub fn for_mass(b: f64, p: f64, k_holder: f64) -> Result<Self> {
        Self::new(b, crate::derived_exponent(p), ral_constant(0.25, k_holder)?)
    }

    /// `a = 1 − 2q`.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.q
    }

    /// `c = 2b/(K a)`, so that `s'(x) = exp(−c x^a)`.
    pub fn c(&self) -> f64 {
        2.0 * self.b / (self.k * self.a())
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (-self.c() * x.max(0.0).powf(self.a())).exp()
    }

    /// `s'' = −(2b/K) x^{−2q} s'`; `−∞` at 0.
    pub fn second(&self, x: f64) -> f64 {
        -2.0 * self.b / self.k * x.powf(-2.0 * self.q) * self.deriv(x)
    }

    /// `(K x^{2q}/2) s'' + b s'`, zero for the exact function.
    pub fn ode_residual(&self, x: f64, s1: f64, s2: f64) -> f64 {
        0.5 * self.k * x.powf(2.0 * self.q) * s2 + self.b * s1
    }

    /// `log((1/a) c^{−1/a})`, the prefactor after substituting `u = c y^a`.
    fn log_prefactor(&self) -> f64 {
        let a = self.a();
        -a.ln() - self.c().ln() / a
    }

    /// `s(∞) = c^{−1/a} Γ(1 + 1/a)`.
    pub fn s_inf(&self) -> f64 {
        let nu = 1.0 / self.a();
        (self.log_prefactor() + libm::lgamma(nu)).exp()
    }

    /// `s(x)` by adaptive quadrature of `u^{1/a − 1} e^{−u}` over `[0, c x^a]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("scale function at negative x = {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(self.s_inf());
        }
        let nu = 1.0 / self.a();
        let upper = self.c() * x.powf(self.a());
        Ok(self.log_prefactor().exp() * lower_gamma_integral(nu, upper)?)
    }

    /// `s⁻¹(y)` for `0 ≤ y < s(∞)`.
    pub fn inv(&self, y: f64) -> Result<f64> {
        let top = self.s_inf();
        if !(y >= 0.0 && y < top) {
            return Err(Error::Domain(format!("{y} outside [0, s(∞) = {top})")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let mut hi = y.max(1e-300);
        let mut tries = 0;
        while self.eval(hi)? <= y {
            hi *= 2.0;
            tries += 1;
            if tries > 2000 {
                return Err(Error::Domain(format!("{y} too close to s(∞) = {top}")));
            }
        }
        let f = |x: f64| self.eval(x).unwrap_or(f64::NAN) - y;
        bracketed_newton(f, |x| self.deriv(x), 0.0, hi, 1e-15)
    }
}

/// `∫₀^U u^{ν−1} e^{−u} du` to about 1e−14 relative accuracy.
fn lower_gamma_integral(nu: f64, upper: f64) -> Result<f64> {
    // Past `cap` the remaining tail is below 1e−17 of Γ(ν).
    let cap = nu + 12.0 * nu.sqrt() + 45.0;
    let u = upper.min(cap);
    let log_scale = if u < nu {
        nu * u.ln() - nu.ln()
    } else {
        libm::lgamma(nu)
    };
    // Work with the integrand divided by its rough size so tiny values keep
    // their relative accuracy.
    let f = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            ((nu - 1.0) * t.ln() - t - log_scale).exp()
        }
    };
    let panels = 32;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = u * i as f64 / panels as f64;
        let hi = u * (i + 1) as f64 / panels as f64;
        total += integrate(f, lo, hi, 1e-16)?;
    }
    Ok(total * log_scale.exp())
}

/// Speed measure in natural scale: density `1/(K s'(y)² y^{2q})` at
/// `y = s⁻¹(x)` plus an atom of mass `1/b` at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedMeasure {
    pub scale: ScaleFn,
}

impl SpeedMeasure {
    pub fn new(scale: ScaleFn) -> Self {
        Self { scale }
    }

    pub fn atom(&self) -> f64 {
        1.0 / self.scale.b
    }

    /// Density at the natural-scale point whose preimage is `y > 0`.
    pub fn density_at_preimage(&self, y: f64) -> f64 {
        let d = self.scale.deriv(y);
        1.0 / (self.scale.k * d * d * y.powf(2.0 * self.scale.q))
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.density_at_preimage(self.scale.inv(x)?))
    }

    /// Absolutely continuous mass of `(0, s(y)]`, `(1/s'(y) − 1)/(2b)`.
    pub fn continuous_mass_to_preimage(&self, y: f64) -> f64 {
        (1.0 / self.scale.deriv(y) - 1.0) / (2.0 * self.scale.b)
    }
}

/// Piecewise-cubic inverse of `s` on `[0, y_max]` for fast repeated lookup.
///
/// Nodes are spaced quadratically in `y`, denser near 0 where `s⁻¹` has a
/// fractional-power expansion. `y_max` is where `s'` has decayed to `e^{−30}`.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    pub scale: ScaleFn,
    s: Vec<f64>,
    y: Vec<f64>,
    dyds: Vec<f64>,
}

impl ScaleTable {
    pub fn new(scale: ScaleFn, nodes: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::param("nodes", "need at least 8 table nodes"));
        }
        let y_max = (30.0 / scale.c()).powf(1.0 / scale.a());
        let mut s = Vec::with_capacity(nodes + 1);
        let mut y = Vec::with_capacity(nodes + 1);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for j in 0..=nodes {
            let yj = y_max * (j as f64 / nodes as f64).powi(2);
            if j > 0 {
                let tol = 1e-15 * (yj - prev) * scale.deriv(yj);
                acc += integrate(|t| scale.deriv(t), prev, yj, tol)?;
            }
            s.push(acc);
            y.push(yj);
            prev = yj;
        }
        let dyds = y.iter().map(|&v| 1.0 / scale.deriv(v)).collect();
        Ok(Self { scale, s, y, dyds })
    }

    /// Largest natural-scale value the table covers.
    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn y_max(&self) -> f64 {
        *self.y.last().unwrap()
    }

    /// `s⁻¹(x)` for `0 ≤ x ≤ s_max` by cubic Hermite interpolation.
    pub fn inv(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.s_max() {
            return self.y_max();
        }
        let j = self.s.partition_point(|&v| v <= x) - 1;
        let (s0, s1) = (self.s[j], self.s[j + 1]);
        let h = s1 - s0;
        let t = (x - s0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[j] + h10 * h * self.dyds[j] + h01 * self.y[j + 1] + h11 * h * self.dyds[j + 1]
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        self.scale.eval(y)
    }
}
