//! Two simulators for `X_t = X_0 + bt + ∫ X^p dB`, `X ≥ 0`.
//!
//! The exact construction runs a reflecting Brownian motion `R` in natural
//! scale and advances the clock by the speed measure: `m(R) du` away from 0
//! and `ΔL/b` from the atom, where `L` is the discrete local time of `R` at
//! 0. Then `X = s⁻¹(R)` on that clock, and `X` is at 0 exactly while the atom
//! drives the clock, so `b · (time at 0) = L` holds by construction.

use crate::error::{open_interval, positive, Error, Result};
use crate::noise::{streams, SeedSpec, LOCAL_TIME_GAIN};

use super::scale::{ScaleTable, SpeedMeasure};

#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub final_value: f64,
    /// Clock time at the end of the run (at least `t_end` unless stopped early).
    pub elapsed: f64,
    /// First clock time the path reached each configured level.
    pub level_hits: Vec<Option<f64>>,
    pub occupation_time_at_zero: f64,
    /// Local time at 0 of the driving reflected walk (exact simulator only).
    pub local_time_driver: Option<f64>,
    /// Driver time `u` at the end (exact simulator only).
    pub driver_time: Option<f64>,
    pub steps: u64,
    /// Euler steps that overshot below 0; reflections at the table top for
    /// the exact simulator.
    pub boundary_events: u64,
}

impl PathSummary {
    pub fn occupation_fraction(&self) -> f64 {
        if self.elapsed > 0.0 {
            self.occupation_time_at_zero / self.elapsed
        } else {
            0.0
        }
    }

    /// Index of the first level reached, if any.
    pub fn first_level(&self) -> Option<usize> {
        self.level_hits
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|t| (i, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StickyOptions {
    /// Levels in the original scale; 0 means "hits zero".
    pub levels: Vec<f64>,
    /// Stop as soon as any level is reached.
    pub stop_at_first_hit: bool,
}

/// `P(sup of a Brownian bridge from a to b over time h exceeds c)`, `a, b < c`.
#[inline]
fn bridge_cross(a: f64, b: f64, c: f64, h: f64) -> f64 {
    (-2.0 * (c - a) * (c - b) / h).exp()
}

/// Exact-law simulator. The driver step is `min(dt, dt/m)` with `m` the
/// speed density at the current point, so each step advances the clock by
/// roughly `dt` at most apart from the atom's contribution `ΔL/b`.
///
/// `observer(clock, x)` sees every step.
pub fn simulate_sticky_exact(
    seed: SeedSpec,
    table: &ScaleTable,
    x0: f64,
    t_end: f64,
    dt: f64,
    opts: &StickyOptions,
    mut observer: impl FnMut(f64, f64),
) -> Result<PathSummary> {
    if !(x0 >= 0.0 && x0 < table.y_max()) {
        return Err(Error::param("x0", format!("{x0} outside [0, {})", table.y_max())));
    }
    positive("t_end", t_end)?;
    positive("dt", dt)?;
    let m = SpeedMeasure::new(table.scale);
    let b = table.scale.b;
    let top = table.s_max();
    let targets: Vec<f64> = opts
        .levels
        .iter()
        .map(|&l| if l <= 0.0 { Ok(0.0) } else { table.eval(l) })
        .collect::<Result<_>>()?;
    let mut normals = seed.with_stream(streams::PATH).normals();
    let mut bridge = seed.with_stream(streams::BRIDGE).normals();

    let mut r = table.eval(x0)?;
    let (mut clock, mut u, mut lt, mut occ) = (0.0, 0.0, 0.0, 0.0);
    let mut hits: Vec<Option<f64>> = targets
        .iter()
        .map(|&c| if (c == 0.0 && r == 0.0) || (c > 0.0 && r >= c) { Some(0.0) } else { None })
        .collect();
    let mut steps = 0u64;
    let mut top_reflections = 0u64;
    let stop = |hits: &[Option<f64>]| opts.stop_at_first_hit && hits.iter().any(Option::is_some);

    while clock < t_end && !stop(&hits) {
        // Speed density at R, averaged over [0, h) next to the boundary.
        let rate_at = |h: f64| -> (f64, bool) {
            if r < h {
                let y_h = table.inv(h);
                (m.continuous_mass_to_preimage(y_h) / h, true)
            } else {
                (m.density_at_preimage(table.inv(r)), false)
            }
        };
        let (rate0, _) = rate_at(dt.sqrt());
        let delta = dt.min(dt / rate0);
        let h = delta.sqrt();
        let (rate, near_zero) = rate_at(h);

        let mut dl = 0.0;
        if near_zero {
            dl = LOCAL_TIME_GAIN * h;
        }
        let prev = r;
        let mut next = r + h * normals.normal();
        let reflected = next < 0.0;
        next = next.abs();
        if next > top {
            next = 2.0 * top - next;
            top_reflections += 1;
        }
        r = next;
        u += delta;
        lt += dl;
        occ += dl / b;
        let t0 = clock;
        clock += rate * delta + dl / b;
        steps += 1;

        for (i, &c) in targets.iter().enumerate() {
            if hits[i].is_some() {
                continue;
            }
            let crossed = if c == 0.0 {
                reflected || bridge.uniform() < bridge_cross(-prev, -r, 0.0, delta)
            } else {
                r >= c || bridge.uniform() < bridge_cross(prev, r, c, delta)
            };
            if crossed {
                hits[i] = Some(0.5 * (t0 + clock));
            }
        }
        observer(clock, r);
    }
    Ok(PathSummary {
        final_value: table.inv(r),
        elapsed: clock,
        level_hits: hits,
        occupation_time_at_zero: occ,
        local_time_driver: Some(lt),
        driver_time: Some(u),
        steps,
        boundary_events: top_reflections,
    })
}

/// Euler scheme with the noise switched off below 0:
///
/// ```text
/// Y_{i+1} = Y_i + b dt + 1(Y_i > 0) Y_i^p √dt ξ_i,   X_i = Y_i^+.
/// ```
///
/// A step that overshoots below 0 leaves `X` at 0 until the drift has
/// carried `Y` back up, which is how the scheme acquires sticky time.
/// Occupation at zero counts the steps with `Y_i ≤ 0`.
pub fn simulate_sde_euler(
    seed: SeedSpec,
    b: f64,
    p: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
    opts: &StickyOptions,
) -> Result<PathSummary> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::param("b", format!("{b} must be nonnegative")));
    }
    open_interval("p", p, 0.0, 0.5)?;
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(Error::param("x0", format!("{x0} must be nonnegative")));
    }
    positive("t_end", t_end)?;
    positive("dt", dt)?;
    let n = (t_end / dt * (1.0 - 1e-12)).ceil() as u64;
    let h = t_end / n as f64;
    let sqrt_h = h.sqrt();
    let mut normals = seed.with_stream(streams::PATH).normals();
    let mut y = x0;
    let mut occ = 0.0;
    let mut overshoots = 0u64;
    let mut hits: Vec<Option<f64>> = opts
        .levels
        .iter()
        .map(|&l| if (l <= 0.0 && x0 == 0.0) || (l > 0.0 && x0 >= l) { Some(0.0) } else { None })
        .collect();
    let mut steps = 0;
    for i in 0..n {
        if opts.stop_at_first_hit && hits.iter().any(Option::is_some) {
            break;
        }
        let noise = if y > 0.0 { y.powf(p) * sqrt_h * normals.normal() } else { 0.0 };
        if y <= 0.0 {
            occ += h;
        }
        let next = y + b * h + noise;
        if y > 0.0 && next <= 0.0 {
            overshoots += 1;
        }
        y = next;
        steps += 1;
        let t = (i + 1) as f64 * h;
        for (k, &l) in opts.levels.iter().enumerate() {
            if hits[k].is_none() && ((l <= 0.0 && y <= 0.0) || (l > 0.0 && y >= l)) {
                hits[k] = Some(t);
            }
        }
    }
    Ok(PathSummary {
        final_value: y.max(0.0),
        elapsed: steps as f64 * h,
        level_hits: hits,
        occupation_time_at_zero: occ,
        local_time_driver: None,
        driver_time: None,
        steps,
        boundary_events: overshoots,
    })
}
