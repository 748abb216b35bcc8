//! Finite-difference discretisation of `∂X/∂t = ΔX/2 + X^p Ẇ + s·ψ` on
//! `[−L, L]` with zero Dirichlet ends.
//!
//! Cells have centres `x_i = −L + (i + 1/2)dx`. The Laplacian is the
//! three-point stencil, white noise enters a cell as `ξ·√(dt/dx)` and the
//! nonlinearity is evaluated at the start of the step (Itô).
//!
//! Only the cells that can be nonzero are touched: the support of the field
//! widened by one cell per step, plus the support of `ψ` while the source is
//! on. Cells outside that range are zero and stay zero.

use std::ops::Range;

use crate::error::{open_interval, positive, Error, Result};
use crate::holder::{holder_quotient, ral_constant, PairSchedule};
use crate::noise::{streams, NoiseSlice, SeedSpec, WhiteNoise};

/// Explicit-scheme stability limit for `dt/dx²`.
pub const MAX_RATIO: f64 = 0.5;
pub const DEFAULT_RATIO: f64 = 0.25;
pub const DEFAULT_ZERO_MASS_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_cells: usize,
    pub dt: f64,
    /// A field counts as extinct when its mass drops below
    /// `zero_mass_factor · dx · √(dt/dx)`.
    pub zero_mass_factor: f64,
}

impl GridSpec {
    /// Grid with `dt = ratio · dx²`.
    pub fn new(half_width: f64, n_cells: usize, ratio: f64) -> Result<Self> {
        positive("half_width", half_width)?;
        positive("ratio", ratio)?;
        if n_cells < 3 {
            return Err(Error::param("n_cells", format!("{n_cells} < 3")));
        }
        let dx = 2.0 * half_width / n_cells as f64;
        Self::with_dt(half_width, n_cells, ratio * dx * dx)
    }

    pub fn with_dt(half_width: f64, n_cells: usize, dt: f64) -> Result<Self> {
        let g = Self {
            half_width,
            n_cells,
            dt,
            zero_mass_factor: DEFAULT_ZERO_MASS_FACTOR,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        positive("half_width", self.half_width)?;
        positive("dt", self.dt)?;
        positive("zero_mass_factor", self.zero_mass_factor)?;
        if self.n_cells < 3 {
            return Err(Error::param("n_cells", format!("{} < 3", self.n_cells)));
        }
        if self.ratio() > MAX_RATIO {
            return Err(Error::Config(format!(
                "dt/dx² = {} exceeds the explicit stability limit {MAX_RATIO}",
                self.ratio()
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    pub fn ratio(&self) -> f64 {
        let dx = self.dx();
        self.dt / (dx * dx)
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dx()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.dx()).floor();
        (i.max(0.0) as usize).min(self.n_cells - 1)
    }

    pub fn delta_mass(&self) -> f64 {
        let dx = self.dx();
        self.zero_mass_factor * dx * (self.dt / dx).sqrt()
    }

    /// Number of steps and the (possibly shortened) step covering `[0, t]` exactly.
    pub fn steps_for(&self, t: f64) -> (u64, f64) {
        if t <= 0.0 {
            return (0, self.dt);
        }
        let n = (t / self.dt * (1.0 - 1e-12)).ceil().max(1.0);
        (n as u64, t / n)
    }
}

/// `2Φ(−(L − r)/√t)`: mass a Brownian particle started inside `[−r, r]`
/// loses through `±L` by time `t`, an upper bound for the truncation error.
pub fn truncation_bound(half_width: f64, source_radius: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    libm::erfc((half_width - source_radius) / (2.0 * t).sqrt())
}

/// Nonnegative immigration density `ψ` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFn {
    pub values: Vec<f64>,
    pub support: Range<usize>,
    /// `dx · Σ ψ_i`.
    pub b: f64,
    pub sup: f64,
    pub sup_deriv: f64,
    pub radius: f64,
}

impl SourceFn {
    /// Smooth bump `c·exp(−1/(1 − x²))` on `|x| < 1`, normalised so the grid
    /// sum gives exactly `b`.
    pub fn bump(grid: &GridSpec, b: f64) -> Result<Self> {
        Self::bump_with_radius(grid, b, 1.0)
    }

    pub fn bump_with_radius(grid: &GridSpec, b: f64, radius: f64) -> Result<Self> {
        positive("b", b)?;
        positive("radius", radius)?;
        if radius >= grid.half_width {
            return Err(Error::Config(format!(
                "source radius {radius} does not fit inside [−{0}, {0}]",
                grid.half_width
            )));
        }
        let shape = |x: f64| {
            let u = x / radius;
            if u.abs() < 1.0 {
                (-1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        };
        let dx = grid.dx();
        let raw: Vec<f64> = (0..grid.n_cells).map(|i| shape(grid.x(i))).collect();
        let total: f64 = raw.iter().sum::<f64>() * dx;
        if total <= 0.0 {
            return Err(Error::Config("grid too coarse to resolve the source".into()));
        }
        let c = b / total;
        let values: Vec<f64> = raw.iter().map(|v| v * c).collect();
        let lo = values.iter().position(|&v| v > 0.0).unwrap_or(0);
        let hi = values.iter().rposition(|&v| v > 0.0).map_or(0, |i| i + 1);
        // Analytic derivative sampled finely on (0, radius).
        let mut sup_deriv = 0.0f64;
        for j in 1..20_000 {
            let u = j as f64 / 20_000.0;
            let d = (-1.0 / (1.0 - u * u)).exp() * 2.0 * u / (1.0 - u * u).powi(2) / radius;
            sup_deriv = sup_deriv.max(c * d);
        }
        Ok(Self {
            sup: values.iter().copied().fold(0.0, f64::max),
            b: values.iter().sum::<f64>() * dx,
            values,
            support: lo..hi,
            sup_deriv,
            radius,
        })
    }
}

/// A nonnegative field on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.n_cells],
            grid,
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells {
            return Err(Error::Contract(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Contract(format!("field value {v} is not nonnegative")));
        }
        Ok(Self { grid, values })
    }

    /// Unit mass concentrated in the cell containing `x`.
    pub fn delta(grid: GridSpec, x: f64, weight: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.values[grid.cell_of(x)] = weight / grid.dx();
        f
    }

    pub fn mass(&self) -> f64 {
        mass(&self.values, self.grid.dx())
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest range holding every nonzero value.
    pub fn active(&self) -> Range<usize> {
        active_range(&self.values)
    }

    /// Largest value in the outermost 5% of cells on either side.
    pub fn boundary_max(&self) -> f64 {
        let edge = (self.grid.n_cells / 20).max(1);
        let n = self.values.len();
        self.values[..edge]
            .iter()
            .chain(&self.values[n - edge..])
            .copied()
            .fold(0.0, f64::max)
    }

    /// `sup_x e^{λ|x|} f(x)`.
    pub fn rap_norm(&self, lambda: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (lambda * self.grid.x(i).abs()).exp() * v)
            .fold(0.0, f64::max)
    }

    pub fn holder14(&self) -> f64 {
        holder_quotient(&self.values, self.grid.dx(), 0.25, PairSchedule::Auto)
    }
}

pub fn mass(values: &[f64], dx: f64) -> f64 {
    values.iter().sum::<f64>() * dx
}

pub fn active_range(values: &[f64]) -> Range<usize> {
    match values.iter().position(|&v| v != 0.0) {
        Some(lo) => lo..values.iter().rposition(|&v| v != 0.0).unwrap() + 1,
        None => 0..0,
    }
}

/// `dx · Σ f_i^{2p}`, the rate of quadratic variation of the mass martingale.
pub fn qv_rate(values: &[f64], dx: f64, p: f64) -> f64 {
    values.iter().map(|&v| pow(v, 2.0 * p)).sum::<f64>() * dx
}

#[inline]
fn pow(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else if p == 0.5 {
        v.sqrt()
    } else if p == 0.25 {
        v.sqrt().sqrt()
    } else {
        v.powf(p)
    }
}

/// Cells a step must visit: the active range widened by one, joined with the
/// source support when the source is on.
pub fn step_region(n: usize, active: &Range<usize>, source: Option<&Range<usize>>) -> Range<usize> {
    let mut r = if active.is_empty() {
        0..0
    } else {
        active.start.saturating_sub(1)..(active.end + 1).min(n)
    };
    if let Some(s) = source.filter(|s| !s.is_empty()) {
        r = if r.is_empty() {
            s.clone()
        } else {
            r.start.min(s.start)..r.end.max(s.end)
        };
    }
    r
}

pub(crate) fn shrink(values: &[f64], region: Range<usize>) -> Range<usize> {
    let slice = &values[region.clone()];
    let r = active_range(slice);
    if r.is_empty() {
        0..0
    } else {
        region.start + r.start..region.start + r.end
    }
}

/// Explicit heat step plus `dt · src_scale · ψ`, in place over `region`.
pub(crate) fn heat_region(
    values: &mut [f64],
    scratch: &mut [f64],
    region: Range<usize>,
    lambda: f64,
    source: Option<(&[f64], f64)>,
) {
    let n = values.len();
    for i in region.clone() {
        let left = if i > 0 { values[i - 1] } else { 0.0 };
        let right = if i + 1 < n { values[i + 1] } else { 0.0 };
        let mut z = values[i] + lambda * (left - 2.0 * values[i] + right);
        if let Some((psi, rate)) = source {
            z += rate * psi[i];
        }
        scratch[i] = z.max(0.0);
    }
    values[region.clone()].copy_from_slice(&scratch[region]);
}

/// One explicit heat step with zero Dirichlet ends.
pub fn heat_step(f: &Field) -> Result<Field> {
    f.grid.validate()?;
    let mut out = f.clone();
    let mut scratch = vec![0.0; f.values.len()];
    let region = step_region(f.values.len(), &f.active(), None);
    let lambda = f.grid.ratio() / 2.0;
    heat_region(&mut out.values, &mut scratch, region, lambda, None);
    Ok(out)
}

/// `2∫₀^τ P_s ψ ds`: the solution of `∂X/∂t = ΔX/2 + 2ψ` from zero, stepped
/// with `⌈τ/dt⌉` equal substeps.
pub fn ramp_field(src: &SourceFn, tau: f64, grid: &GridSpec) -> Result<Field> {
    grid.validate()?;
    if !(tau >= 0.0) {
        return Err(Error::param("tau", format!("{tau} must be nonnegative")));
    }
    if src.values.len() != grid.n_cells {
        return Err(Error::Contract("source sampled on a different grid".into()));
    }
    let mut f = Field::zeros(*grid);
    let (steps, h) = grid.steps_for(tau);
    let mut ramp = RampStepper::new(grid, src, h);
    for _ in 0..steps {
        ramp.step(&mut f.values);
    }
    Ok(f)
}

/// Deterministic heat step with source `2ψ` and a fixed substep.
#[derive(Debug, Clone)]
pub(crate) struct RampStepper<'a> {
    psi: &'a SourceFn,
    lambda: f64,
    rate: f64,
    active: Range<usize>,
    scratch: Vec<f64>,
}

impl<'a> RampStepper<'a> {
    pub(crate) fn new(grid: &GridSpec, psi: &'a SourceFn, h: f64) -> Self {
        let dx = grid.dx();
        Self {
            psi,
            lambda: h / (2.0 * dx * dx),
            rate: 2.0 * h,
            active: 0..0,
            scratch: vec![0.0; grid.n_cells],
        }
    }

    pub(crate) fn step(&mut self, values: &mut [f64]) {
        let region = step_region(values.len(), &self.active, Some(&self.psi.support));
        heat_region(
            values,
            &mut self.scratch,
            region.clone(),
            self.lambda,
            Some((&self.psi.values, self.rate)),
        );
        self.active = region;
    }
}

/// Per-step counters of the SPDE update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Cells with a noise coefficient.
    pub noisy: u64,
    /// Cells updated by the mean-preserving positive part.
    pub tamed: u64,
    /// Cells where the plain Euler value was negative and set to 0.
    pub clipped: u64,
    /// `dx · Σ f_i^{2p}` before the step.
    pub qv_rate: f64,
}

impl StepStats {
    pub fn add(&mut self, o: &StepStats) {
        self.noisy += o.noisy;
        self.tamed += o.tamed;
        self.clipped += o.clipped;
        self.qv_rate += o.qv_rate;
    }
}

/// Above this ratio of drift-updated value to noise scale a negative
/// Gaussian outcome has probability below 1e−17.
const TAME_CUTOFF: f64 = 8.5;

#[inline]
fn std_normal_cdf(a: f64) -> f64 {
    0.5 * libm::erfc(-a * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
fn std_normal_pdf(a: f64) -> f64 {
    const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_TAU * (-0.5 * a * a).exp()
}

/// Positive-part Euler update of one cell with drift-updated value `z ≥ 0`
/// and noise scale `sigma`.
///
/// Plain clipping `(z + σξ)^+` has conditional mean `m = zΦ(z/σ) + σφ(z/σ)`,
/// which exceeds `z`. Near zero the update is rescaled to
/// `z·(z + σξ)^+ / m`, keeping the conditional mean at `z` and the value
/// nonnegative. Far from zero it is ordinary Euler.
#[inline]
pub fn positive_update(z: f64, sigma: f64, xi: f64, stats: &mut StepStats) -> f64 {
    if sigma == 0.0 || z == 0.0 {
        return z;
    }
    stats.noisy += 1;
    let y = z + sigma * xi;
    let a = z / sigma;
    if a >= TAME_CUTOFF {
        if y < 0.0 {
            stats.clipped += 1;
            return 0.0;
        }
        return y;
    }
    stats.tamed += 1;
    if y <= 0.0 {
        return 0.0;
    }
    let m = z * std_normal_cdf(a) + sigma * std_normal_pdf(a);
    z * y / m
}

/// Model constants of one SPDE path.
#[derive(Debug, Clone, Copy)]
pub struct SpdeParams<'a> {
    pub p: f64,
    /// Source multiplier, one of 0, 1, 2.
    pub src_scale: f64,
    pub source: Option<&'a SourceFn>,
}

/// In-place stepper for one field over its active range.
#[derive(Debug, Clone)]
pub struct SpdeStepper {
    pub grid: GridSpec,
    scratch: Vec<f64>,
}

impl SpdeStepper {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            scratch: vec![0.0; grid.n_cells],
            grid,
        }
    }

    /// The cells the next step of a field with `active` support writes to.
    pub fn region(&self, active: &Range<usize>, par: &SpdeParams) -> Range<usize> {
        let src = par
            .source
            .filter(|_| par.src_scale > 0.0)
            .map(|s| &s.support);
        step_region(self.grid.n_cells, active, src)
    }

    /// Advances `values` by one step of length `self.grid.dt`, using noise
    /// that must cover [`Self::region`]. Updates `active` in place.
    pub fn step(
        &mut self,
        values: &mut [f64],
        active: &mut Range<usize>,
        par: &SpdeParams,
        noise: &NoiseSlice,
    ) -> StepStats {
        let region = self.region(active, par);
        let mut stats = StepStats::default();
        if region.is_empty() {
            *active = 0..0;
            return stats;
        }
        debug_assert!(noise.covers(region.start, region.end));
        let grid = self.grid;
        let dx = grid.dx();
        let lambda = grid.ratio() / 2.0;
        let scale = (grid.dt / dx).sqrt();
        let drift = par
            .source
            .filter(|_| par.src_scale > 0.0)
            .map(|s| (s, grid.dt * par.src_scale));
        let n = values.len();
        let mut qv = 0.0;
        for i in region.clone() {
            let f = values[i];
            let left = if i > 0 { values[i - 1] } else { 0.0 };
            let right = if i + 1 < n { values[i + 1] } else { 0.0 };
            let mut z = f + lambda * (left - 2.0 * f + right);
            if let Some((s, rate)) = drift {
                z += rate * s.values[i];
            }
            let z = z.max(0.0);
            let fp = pow(f, par.p);
            qv += fp * fp;
            self.scratch[i] = positive_update(z, fp * scale, noise.at(i), &mut stats);
        }
        values[region.clone()].copy_from_slice(&self.scratch[region.clone()]);
        stats.qv_rate = qv * dx;
        *active = shrink(values, region);
        stats
    }
}

/// One SPDE step on a whole field, drawing nothing: `noise` must cover every
/// cell the step touches (a full slice always does).
pub fn spde_step(
    f: &Field,
    src_scale: f64,
    p: f64,
    source: Option<&SourceFn>,
    noise: &NoiseSlice,
) -> Result<(Field, StepStats)> {
    f.grid.validate()?;
    open_interval("p", p, 0.0, 1.0)?;
    if !matches!(src_scale, s if s == 0.0 || s == 1.0 || s == 2.0) {
        return Err(Error::param("src_scale", format!("{src_scale} not in {{0, 1, 2}}")));
    }
    if src_scale > 0.0 && source.is_none() {
        return Err(Error::Contract("a positive src_scale needs a source".into()));
    }
    if let Some(v) = f.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Contract(format!("negative field value {v}")));
    }
    let par = SpdeParams { p, src_scale, source };
    let mut stepper = SpdeStepper::new(f.grid);
    let mut active = f.active();
    let region = stepper.region(&active, &par);
    if !region.is_empty() && !noise.covers(region.start, region.end) {
        return Err(Error::Contract(format!(
            "noise covers cells {}..{}, step needs {}..{}",
            noise.lo,
            noise.hi(),
            region.start,
            region.end
        )));
    }
    let mut out = f.clone();
    let stats = stepper.step(&mut out.values, &mut active, &par, noise);
    Ok((out, stats))
}

/// Outcome of the field inequality `dx·Σf^{2p} ≥ K(k)·mass^{2p'}` on one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the quadratic-variation lower bound for a field whose Hölder-1/4
/// estimate is known to be at most `k`.
pub fn field_inequality(values: &[f64], dx: f64, p: f64, k: f64) -> Result<FieldInequality> {
    let kk = ral_constant(0.25, k)?;
    let lhs = qv_rate(values, dx, p);
    let rhs = kk * mass(values, dx).powf(2.0 * crate::derived_exponent(p));
    Ok(FieldInequality {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// Running tally of field-inequality checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityTally {
    pub checked: u64,
    pub violations: u64,
    pub min_ratio: f64,
}

impl Default for InequalityTally {
    fn default() -> Self {
        Self {
            checked: 0,
            violations: 0,
            min_ratio: f64::INFINITY,
        }
    }
}

impl InequalityTally {
    pub fn record(&mut self, r: &FieldInequality) {
        self.checked += 1;
        if !r.holds {
            self.violations += 1;
        }
        if r.rhs > 0.0 {
            self.min_ratio = self.min_ratio.min(r.lhs / r.rhs);
        }
    }

    pub fn merge(&mut self, o: &InequalityTally) {
        self.checked += o.checked;
        self.violations += o.violations;
        self.min_ratio = self.min_ratio.min(o.min_ratio);
    }

    /// Checks every `k` with `holder ≤ k` against the field.
    pub fn check_field(&mut self, values: &[f64], dx: f64, p: f64, holder: f64, ks: &[f64]) -> Result<()> {
        for &k in ks.iter().filter(|&&k| holder <= k) {
            self.record(&field_inequality(values, dx, p, k)?);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdeConfig {
    pub grid: GridSpec,
    pub p: f64,
    pub b: f64,
    pub src_scale: f64,
    pub t_end: f64,
    /// Record a row every this many steps (0 records only the end).
    pub record_every: u64,
    /// Thresholds `k` for the field-inequality check at recorded rows.
    pub ks: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdeRecord {
    pub t: f64,
    pub mass: f64,
    pub sup: f64,
    pub holder14: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpdeRun {
    pub records: Vec<SpdeRecord>,
    pub final_field: Field,
    pub stats: StepStats,
    pub steps: u64,
    pub inequality: InequalityTally,
    /// Largest value seen in the outer 5% of cells at recorded rows.
    pub boundary_max: f64,
    pub truncation_bound: f64,
}

/// Simulates one path from the zero field up to `t_end`.
pub fn simulate_spde(seed: SeedSpec, cfg: &SpdeConfig) -> Result<SpdeRun> {
    cfg.grid.validate()?;
    open_interval("p", cfg.p, 0.0, 1.0)?;
    positive("t_end", cfg.t_end)?;
    let source = if cfg.src_scale > 0.0 {
        Some(SourceFn::bump(&cfg.grid, cfg.b)?)
    } else {
        None
    };
    let (steps, dt) = cfg.grid.steps_for(cfg.t_end);
    let grid = GridSpec { dt, ..cfg.grid };
    let dx = grid.dx();
    let par = SpdeParams {
        p: cfg.p,
        src_scale: cfg.src_scale,
        source: source.as_ref(),
    };
    let mut field = Field::zeros(grid);
    let mut active = 0..0;
    let mut stepper = SpdeStepper::new(grid);
    let mut noise = WhiteNoise::new(seed.with_stream(streams::SPDE_NOISE));
    let mut slice = NoiseSlice {
        step: 0,
        lo: 0,
        values: Vec::with_capacity(grid.n_cells),
    };
    let mut records = Vec::new();
    let mut stats = StepStats::default();
    let mut inequality = InequalityTally::default();
    let mut boundary_max = 0.0f64;
    let mut record = |k: u64, f: &Field, tally: &mut InequalityTally| -> Result<()> {
        let holder14 = f.holder14();
        tally.check_field(&f.values, dx, cfg.p, holder14, &cfg.ks)?;
        boundary_max = boundary_max.max(f.boundary_max());
        records.push(SpdeRecord {
            t: k as f64 * dt,
            mass: f.mass(),
            sup: f.sup(),
            holder14,
        });
        Ok(())
    };
    for k in 0..steps {
        let region = stepper.region(&active, &par);
        slice.step = k;
        slice.lo = region.start;
        slice.values.resize(region.len(), 0.0);
        noise.fill(k, region.start, &mut slice.values);
        let s = stepper.step(&mut field.values, &mut active, &par, &slice);
        stats.add(&s);
        let done = k + 1;
        if (cfg.record_every > 0 && done % cfg.record_every == 0) || done == steps {
            record(done, &field, &mut inequality)?;
        }
    }
    Ok(SpdeRun {
        records,
        final_field: field,
        stats,
        steps,
        inequality,
        boundary_max,
        truncation_bound: truncation_bound(
            grid.half_width,
            source.as_ref().map_or(0.0, |s| s.radius),
            cfg.t_end,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(10.0, n, DEFAULT_RATIO).unwrap()
    }

    #[test]
    fn grid_rejects_unstable_ratio() {
        assert!(matches!(GridSpec::new(10.0, 64, 0.6), Err(Error::Config(_))));
        assert!(GridSpec::new(10.0, 64, 0.5).is_ok());
        let g = grid(64);
        assert!(heat_step(&Field::zeros(GridSpec { dt: 1.0, ..g })).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid(64);
        let f = Field::zeros(g);
        assert_eq!(heat_step(&f).unwrap(), f);
        let noise = WhiteNoise::new(SeedSpec::new(1, 0, 1)).slice(0, 0, 64);
        let (out, stats) = spde_step(&f, 0.0, 0.25, None, &noise).unwrap();
        assert_eq!(out, f);
        assert_eq!(stats.noisy, 0);
    }

    #[test]
    fn source_is_normalised() {
        let g = grid(512);
        let s = SourceFn::bump(&g, 1.0).unwrap();
        assert!((s.b - 1.0).abs() < 1e-14);
        assert!(s.values.iter().all(|&v| v >= 0.0));
        // c·e^{-1} with c ≈ 1/0.443994 for the unit bump
        assert!((s.sup - (-1f64).exp() / 0.443_993_816_168_079_4).abs() < 1e-3);
        assert!(s.sup_deriv > s.sup);
    }

    #[test]
    fn heat_step_conserves_interior_mass() {
        let g = grid(256);
        let src = SourceFn::bump(&g, 1.0).unwrap();
        let mut f = Field::from_values(g, src.values.clone()).unwrap();
        for _ in 0..200 {
            let next = heat_step(&f).unwrap();
            assert!(next.mass() <= f.mass() + 1e-14);
            f = next;
        }
        assert!((f.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_mass_and_sup() {
        let g = grid(512);
        let src = SourceFn::bump(&g, 1.0).unwrap();
        assert_eq!(ramp_field(&src, 0.0, &g).unwrap().mass(), 0.0);
        let eps = 0.05;
        let r = ramp_field(&src, eps, &g).unwrap();
        assert!((r.mass() - 2.0 * eps).abs() < 1e-8, "{}", r.mass());
        assert!(r.sup() <= 2.0 * eps * src.sup * (1.0 + 1e-12));
        assert!(r.mass() <= 4.0 * eps.sqrt());
        assert!(ramp_field(&src, -1.0, &g).is_err());
    }

    #[test]
    fn spde_step_rejects_bad_input() {
        let g = grid(32);
        let noise = WhiteNoise::new(SeedSpec::new(1, 0, 1)).slice(0, 0, 32);
        let mut f = Field::zeros(g);
        f.values[3] = -1.0;
        assert!(matches!(spde_step(&f, 0.0, 0.25, None, &noise), Err(Error::Contract(_))));
        let f = Field::zeros(g);
        assert!(spde_step(&f, 1.0, 0.25, None, &noise).is_err());
        assert!(spde_step(&f, 0.5, 0.25, None, &noise).is_err());
        assert!(spde_step(&f, 0.0, 1.5, None, &noise).is_err());
    }

    #[test]
    fn positive_update_is_mean_preserving() {
        // E[z (z + σξ)^+ / m] = z by construction; check by quadrature over ξ.
        for &(z, sigma) in &[(0.1, 1.0), (1.0, 1.0), (0.01, 0.5), (2.0, 0.3)] {
            let mut stats = StepStats::default();
            let h = 1e-3;
            let mut mean = 0.0;
            let mut xi = -12.0;
            while xi < 12.0 {
                mean += positive_update(z, sigma, xi, &mut stats) * std_normal_pdf(xi) * h;
                xi += h;
            }
            assert!((mean - z).abs() < 1e-6 * (1.0 + z), "z {z} sigma {sigma} mean {mean}");
        }
    }

    #[test]
    fn stepper_matches_full_slice_step() {
        let g = grid(128);
        let src = SourceFn::bump(&g, 1.0).unwrap();
        let seed = SeedSpec::new(3, 0, streams::SPDE_NOISE);
        let mut full = Field::zeros(g);
        let mut noise = WhiteNoise::new(seed);
        for k in 0..50 {
            let slice = noise.slice(k, 0, g.n_cells);
            full = spde_step(&full, 1.0, 0.25, Some(&src), &slice).unwrap().0;
        }
        let cfg = SpdeConfig {
            grid: g,
            p: 0.25,
            b: 1.0,
            src_scale: 1.0,
            t_end: 50.0 * g.dt,
            record_every: 0,
            ks: vec![],
        };
        let sim = simulate_spde(SeedSpec::new(3, 0, 0), &cfg).unwrap();
        assert_eq!(sim.steps, 50);
        for (a, b) in sim.final_field.values.iter().zip(&full.values) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn simulated_fields_are_nonnegative() {
        let cfg = SpdeConfig {
            grid: grid(128),
            p: 0.25,
            b: 1.0,
            src_scale: 1.0,
            t_end: 0.5,
            record_every: 20,
            ks: vec![8.0, 16.0],
        };
        let run = simulate_spde(SeedSpec::new(5, 1, 0), &cfg).unwrap();
        assert!(run.final_field.values.iter().all(|&v| v >= 0.0));
        assert!(!run.records.is_empty());
        assert_eq!(run.inequality.violations, 0);
        assert!(run.truncation_bound < 1e-10);
    }

    #[test]
    fn field_inequality_examples() {
        let g = grid(256);
        let src = SourceFn::bump(&g, 1.0).unwrap();
        let r = field_inequality(&src.values, g.dx(), 0.25, 8.0).unwrap();
        assert!(r.holds && r.lhs > r.rhs);
        let z = field_inequality(&[0.0; 10], 0.1, 0.25, 8.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        assert!(z.holds);
    }

    #[test]
    fn step_region_cases() {
        assert_eq!(step_region(10, &(0..0), None), 0..0);
        assert_eq!(step_region(10, &(0..0), Some(&(3..5))), 3..5);
        assert_eq!(step_region(10, &(0..10), None), 0..10);
        assert_eq!(step_region(10, &(4..6), Some(&(1..2))), 1..7);
    }
}
