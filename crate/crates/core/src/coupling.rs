//! The alternating excursion pair `(X^ε, Y^ε)` driven by one white noise.
//!
//! Excursion `j` starts from `X = Y = 0`. For a time `ε` its owner (`X` for
//! even `j`, `Y` for odd `j`) follows `∂/∂t = Δ/2 + 2ψ` while the other field
//! stays at 0. Then both fields follow the SPDE with source `ψ` and the same
//! noise, the owner dominating the other, until the owner's mass vanishes.
//! Both fields are reset to 0 and the roles swap.
//!
//! Over a ramp the owner gains `ψ` relative to the solution it approximates
//! and the other field loses `ψ`. The accumulated discrepancy is
//! `A₁(t, x) = a(t)ψ(x)` with a scalar `a` that goes from 0 to `ε` over even
//! ramps and back to 0 over odd ones.

use std::ops::Range;

use crate::error::{open_interval, positive, Error, Result};
use crate::heat::{
    heat_region, mass, shrink, step_region, Field, GridSpec, InequalityTally, SourceFn, SpdeParams,
    SpdeStepper, StepStats,
};
use crate::holder::{holder_quotient, ral_constant, PairSchedule};
use crate::noise::{streams, NoiseSlice, SeedSpec, WhiteNoise};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    X,
    Y,
}

impl Role {
    /// Owner of excursion `j`.
    pub fn of_excursion(j: usize) -> Self {
        if j.is_multiple_of(2) {
            Role::X
        } else {
            Role::Y
        }
    }

    pub fn other(self) -> Self {
        match self {
            Role::X => Role::Y,
            Role::Y => Role::X,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Ramp { owner: Role },
    Stochastic { dominant: Role },
}

impl Phase {
    pub fn role(&self) -> Role {
        match *self {
            Phase::Ramp { owner } => owner,
            Phase::Stochastic { dominant } => dominant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupleConfig {
    pub grid: GridSpec,
    pub p: f64,
    pub b: f64,
    pub eps: f64,
    pub x0: f64,
    /// Hölder threshold used for the time change `τ`.
    pub k: f64,
    /// Thresholds whose first-exceedance times `V_k` are tracked.
    pub ks: Vec<f64>,
    /// Steps between Hölder-constant evaluations.
    pub holder_every: u64,
    pub max_excursions: usize,
}

impl CoupleConfig {
    pub fn new(grid: GridSpec, p: f64, b: f64, eps: f64, x0: f64) -> Self {
        Self {
            grid,
            p,
            b,
            eps,
            x0,
            k: 8.0,
            ks: vec![8.0, 16.0, 32.0],
            holder_every: 8,
            max_excursions: default_budget(eps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        open_interval("p", self.p, 0.0, 0.5)?;
        positive("b", self.b)?;
        open_interval("eps", self.eps, 0.0, 1.0)?;
        positive("k", self.k)?;
        if !(2.0 * self.b * self.eps < self.x0 && self.x0 < 1.0) {
            return Err(Error::Config(format!(
                "x0 must satisfy 2·b·eps < x0 < 1, got x0 = {} with 2·b·eps = {}",
                self.x0,
                2.0 * self.b * self.eps
            )));
        }
        if self.holder_every == 0 || self.max_excursions == 0 {
            return Err(Error::Config("holder_every and max_excursions must be positive".into()));
        }
        Ok(())
    }
}

/// `⌈10/ε⌉` excursions.
pub fn default_budget(eps: f64) -> usize {
    (10.0 / eps).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub x: Field,
    pub y: Field,
    x_active: Range<usize>,
    y_active: Range<usize>,
    pub phase: Phase,
    pub j: usize,
    pub t: f64,
    /// `T_j`.
    pub t_start: f64,
    /// `U_j = T_j + ε`, set when the ramp ends.
    pub t_ramp_end: f64,
    pub ramp_steps_done: u64,
    /// `a(t)` with `A₁(t, ·) = a(t)ψ`.
    pub ledger: f64,
    /// Count of stochastic steps taken, used as the noise step index.
    pub noise_step: u64,
}

impl CoupledState {
    pub fn field(&self, r: Role) -> &Field {
        match r {
            Role::X => &self.x,
            Role::Y => &self.y,
        }
    }

    pub fn masses(&self) -> (f64, f64) {
        (self.x.mass(), self.y.mass())
    }

    /// `|⟨X,1⟩ − ⟨Y,1⟩|`.
    pub fn separation(&self) -> f64 {
        let (a, b) = self.masses();
        (a - b).abs()
    }

    fn parts(&mut self, dominant: Role) -> (&mut Vec<f64>, &mut Range<usize>, &mut Vec<f64>, &mut Range<usize>) {
        match dominant {
            Role::X => (&mut self.x.values, &mut self.x_active, &mut self.y.values, &mut self.y_active),
            Role::Y => (&mut self.y.values, &mut self.y_active, &mut self.x.values, &mut self.x_active),
        }
    }
}

/// What one coupled step did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    pub stochastic: bool,
    /// Pre-step mass and quadratic-variation rate of the dominant field.
    pub dominant_mass: f64,
    pub dominant_qv: f64,
    /// `dx·Σ(dominated − dominant)^+` before enforcement, over the dominant mass.
    pub violation_fraction: f64,
    pub ramp_finished: bool,
    pub excursion_finished: bool,
    pub stats: StepStats,
}

/// Owns the source and scratch space for stepping coupled states.
#[derive(Debug, Clone)]
pub struct Coupler {
    pub cfg: CoupleConfig,
    pub source: SourceFn,
    stepper: SpdeStepper,
    scratch: Vec<f64>,
    ramp_steps: u64,
    ramp_h: f64,
}

impl Coupler {
    pub fn new(cfg: CoupleConfig) -> Result<Self> {
        cfg.validate()?;
        let source = SourceFn::bump(&cfg.grid, cfg.b)?;
        let (ramp_steps, ramp_h) = cfg.grid.steps_for(cfg.eps);
        Ok(Self {
            stepper: SpdeStepper::new(cfg.grid),
            scratch: vec![0.0; cfg.grid.n_cells],
            source,
            ramp_steps,
            ramp_h,
            cfg,
        })
    }

    pub fn initial_state(&self) -> CoupledState {
        CoupledState {
            x: Field::zeros(self.cfg.grid),
            y: Field::zeros(self.cfg.grid),
            x_active: 0..0,
            y_active: 0..0,
            phase: Phase::Ramp { owner: Role::X },
            j: 0,
            t: 0.0,
            t_start: 0.0,
            t_ramp_end: f64::NAN,
            ramp_steps_done: 0,
            ledger: 0.0,
            noise_step: 0,
        }
    }

    fn params(&self) -> SpdeParams<'_> {
        SpdeParams {
            p: self.cfg.p,
            src_scale: 1.0,
            source: Some(&self.source),
        }
    }

    /// Cells the next step needs noise for; empty during a ramp.
    pub fn noise_region(&self, s: &CoupledState) -> Range<usize> {
        match s.phase {
            Phase::Ramp { .. } => 0..0,
            Phase::Stochastic { .. } => {
                let par = self.params();
                let a = self.stepper.region(&s.x_active, &par);
                let b = self.stepper.region(&s.y_active, &par);
                a.start.min(b.start)..a.end.max(b.end)
            }
        }
    }

    /// Advances `s` by one step. `noise` is ignored during a ramp and must
    /// cover [`Self::noise_region`] otherwise.
    pub fn step(&mut self, s: &mut CoupledState, noise: &NoiseSlice) -> StepReport {
        match s.phase {
            Phase::Ramp { owner } => self.ramp_step(s, owner),
            Phase::Stochastic { dominant } => self.stochastic_step(s, dominant, noise),
        }
    }

    fn ramp_step(&mut self, s: &mut CoupledState, owner: Role) -> StepReport {
        let h = self.ramp_h;
        let lambda = h / (2.0 * self.cfg.grid.dx().powi(2));
        let (values, active, _, _) = s.parts(owner);
        let region = step_region(values.len(), active, Some(&self.source.support));
        heat_region(
            values,
            &mut self.scratch,
            region.clone(),
            lambda,
            Some((&self.source.values, 2.0 * h)),
        );
        *active = shrink(values, region);
        s.ramp_steps_done += 1;
        s.t += h;
        s.ledger += if s.j.is_multiple_of(2) { h } else { -h };
        let mut report = StepReport {
            dt: h,
            ..StepReport::default()
        };
        if s.ramp_steps_done == self.ramp_steps {
            s.t = s.t_start + self.cfg.eps;
            s.t_ramp_end = s.t;
            s.ledger = if s.j.is_multiple_of(2) { self.cfg.eps } else { 0.0 };
            s.phase = Phase::Stochastic { dominant: owner };
            report.ramp_finished = true;
        }
        report
    }

    fn stochastic_step(&mut self, s: &mut CoupledState, dominant: Role, noise: &NoiseSlice) -> StepReport {
        let grid = self.cfg.grid;
        let dx = grid.dx();
        let par = SpdeParams {
            p: self.cfg.p,
            src_scale: 1.0,
            source: Some(&self.source),
        };
        let (dom, dom_active, sub, sub_active) = s.parts(dominant);
        let dominant_mass = mass(&dom[dom_active.clone()], dx);
        let mut stats = self.stepper.step(dom, dom_active, &par, noise);
        let dominant_qv = stats.qv_rate;
        let sub_stats = self.stepper.step(sub, sub_active, &par, noise);
        stats.add(&StepStats {
            qv_rate: 0.0,
            ..sub_stats
        });

        // Enforce dominated ≤ dominant.
        let mut violation = 0.0;
        for i in sub_active.clone() {
            if sub[i] > dom[i] {
                violation += sub[i] - dom[i];
                sub[i] = dom[i];
            }
        }
        if violation > 0.0 {
            *sub_active = shrink(sub, sub_active.clone());
        }
        let dom_mass_after = mass(&dom[dom_active.clone()], dx);
        let violation_fraction = if violation > 0.0 {
            violation * dx / dom_mass_after.max(f64::MIN_POSITIVE)
        } else {
            0.0
        };

        let finished = dom_mass_after < grid.delta_mass();
        if finished {
            dom[dom_active.clone()].fill(0.0);
            sub[sub_active.clone()].fill(0.0);
            *dom_active = 0..0;
            *sub_active = 0..0;
        }
        s.noise_step += 1;
        s.t += grid.dt;
        let mut report = StepReport {
            dt: grid.dt,
            stochastic: true,
            dominant_mass,
            dominant_qv,
            violation_fraction,
            stats,
            ..StepReport::default()
        };
        if finished {
            s.j += 1;
            s.t_start = s.t;
            s.t_ramp_end = f64::NAN;
            s.ramp_steps_done = 0;
            s.phase = Phase::Ramp {
                owner: Role::of_excursion(s.j),
            };
            report.excursion_finished = true;
        }
        report
    }
}

/// One step of the coupled pair on a fresh [`Coupler`]. Convenient for
/// inspection, allocation-heavy for loops.
pub fn couple_step(cfg: &CoupleConfig, s: &CoupledState, noise: &NoiseSlice) -> Result<(CoupledState, StepReport)> {
    let mut c = Coupler::new(cfg.clone())?;
    let region = c.noise_region(s);
    if !region.is_empty() && !noise.covers(region.start, region.end) {
        return Err(Error::Contract(format!(
            "noise covers cells {}..{}, step needs {}..{}",
            noise.lo,
            noise.hi(),
            region.start,
            region.end
        )));
    }
    let mut next = s.clone();
    let report = c.step(&mut next, noise);
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionRecord {
    pub j: usize,
    pub t_start: f64,
    pub t_ramp_end: f64,
    pub t_end: f64,
    /// Largest `⟨X,1⟩ ∨ ⟨Y,1⟩` over the excursion.
    pub peak_mass: f64,
    /// Largest `|⟨X,1⟩ − ⟨Y,1⟩|` over the excursion.
    pub peak_separation: f64,
    pub hit_one: bool,
    pub hit_x0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    /// `|⟨X,1⟩ − ⟨Y,1⟩|` reached `x0` first.
    Separated,
    /// `⟨X,1⟩ ∨ ⟨Y,1⟩` reached 1 first.
    HitOne,
    /// Excursion budget exhausted with neither event.
    Budget,
}

impl TrialOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialOutcome::Separated => "separated",
            TrialOutcome::HitOne => "hit_one",
            TrialOutcome::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcome: TrialOutcome,
    pub decision_time: f64,
    pub records: Vec<ExcursionRecord>,
    /// First time the Hölder-1/4 estimate of the pair exceeded each `k` of
    /// the configuration, if it did before the decision.
    pub vk_first: Vec<Option<f64>>,
    pub holder_max: f64,
    /// Steps where `|a| > ε`.
    pub ledger_violations: u64,
    /// `max |a| / ε`.
    pub ledger_max_ratio: f64,
    pub tau_prime_max: f64,
    pub tau_checks: u64,
    pub max_violation_fraction: f64,
    pub inequality: InequalityTally,
    pub stats: StepStats,
    pub steps: u64,
}

impl TrialResult {
    pub fn separated_first(&self) -> bool {
        self.outcome == TrialOutcome::Separated
    }

    pub fn n_excursions(&self) -> usize {
        self.records.len()
    }

    pub fn vk_flagged(&self, i: usize) -> bool {
        self.vk_first.get(i).is_some_and(Option::is_some)
    }
}

/// Fills `slice` with the noise the next step of `s` needs.
fn draw(coupler: &Coupler, s: &CoupledState, noise: &mut WhiteNoise, slice: &mut NoiseSlice) {
    let region = coupler.noise_region(s);
    slice.step = s.noise_step;
    slice.lo = region.start;
    slice.values.resize(region.len(), 0.0);
    noise.fill(s.noise_step, region.start, &mut slice.values);
}

/// Hölder-1/4 estimate of the pair, over each field's active cells plus one
/// zero neighbour on either side.
fn pair_holder(s: &CoupledState, dx: f64) -> f64 {
    let one = |v: &[f64], r: &Range<usize>| {
        if r.is_empty() {
            return 0.0;
        }
        let lo = r.start.saturating_sub(1);
        let hi = (r.end + 1).min(v.len());
        holder_quotient(&v[lo..hi], dx, 0.25, PairSchedule::Banded)
    };
    one(&s.x.values, &s.x_active).max(one(&s.y.values, &s.y_active))
}

/// Runs excursions until the masses separate by `x0`, one of them reaches 1,
/// or the excursion budget runs out.
pub fn run_separation_trial(seed: SeedSpec, cfg: &CoupleConfig) -> Result<TrialResult> {
    let mut coupler = Coupler::new(cfg.clone())?;
    let k_tau = ral_constant(0.25, cfg.k)?;
    let two_p_prime = 2.0 * crate::derived_exponent(cfg.p);
    let dx = cfg.grid.dx();
    let mut noise = WhiteNoise::new(seed.with_stream(streams::SPDE_NOISE));
    let mut slice = NoiseSlice {
        step: 0,
        lo: 0,
        values: Vec::with_capacity(cfg.grid.n_cells),
    };
    let mut s = coupler.initial_state();
    let mut res = TrialResult {
        outcome: TrialOutcome::Budget,
        decision_time: f64::NAN,
        records: Vec::new(),
        vk_first: vec![None; cfg.ks.len()],
        holder_max: 0.0,
        ledger_violations: 0,
        ledger_max_ratio: 0.0,
        tau_prime_max: 0.0,
        tau_checks: 0,
        max_violation_fraction: 0.0,
        inequality: InequalityTally::default(),
        stats: StepStats::default(),
        steps: 0,
    };
    let mut holder = 0.0;
    let (mut peak_mass, mut peak_sep) = (0.0f64, 0.0f64);
    let mut t_ramp_end = f64::NAN;
    let ledger_tol = cfg.eps * (1.0 + 1e-9);

    loop {
        if res.steps.is_multiple_of(cfg.holder_every) {
            holder = pair_holder(&s, dx);
            res.holder_max = res.holder_max.max(holder);
            for (i, &k) in cfg.ks.iter().enumerate() {
                if holder > k && res.vk_first[i].is_none() {
                    res.vk_first[i] = Some(s.t);
                }
            }
            for f in [&s.x, &s.y] {
                res.inequality
                    .check_field(&f.values, dx, cfg.p, holder, &cfg.ks)?;
            }
        }
        draw(&coupler, &s, &mut noise, &mut slice);
        let report = coupler.step(&mut s, &slice);
        res.steps += 1;
        res.stats.add(&report.stats);
        res.max_violation_fraction = res.max_violation_fraction.max(report.violation_fraction);
        res.ledger_max_ratio = res.ledger_max_ratio.max(s.ledger.abs() / cfg.eps);
        if s.ledger.abs() > ledger_tol {
            res.ledger_violations += 1;
        }
        if report.stochastic {
            let tau_prime = if holder <= cfg.k && report.dominant_qv > 0.0 {
                k_tau * report.dominant_mass.powf(two_p_prime) / report.dominant_qv
            } else {
                1.0
            };
            res.tau_prime_max = res.tau_prime_max.max(tau_prime);
            res.tau_checks += 1;
        }
        if report.ramp_finished {
            t_ramp_end = s.t_ramp_end;
        }

        let (mx, my) = s.masses();
        let sep = (mx - my).abs();
        let top = mx.max(my);
        peak_mass = peak_mass.max(top);
        peak_sep = peak_sep.max(sep);
        let decided = if sep >= cfg.x0 {
            Some(TrialOutcome::Separated)
        } else if top >= 1.0 {
            Some(TrialOutcome::HitOne)
        } else {
            None
        };
        if report.excursion_finished || decided.is_some() {
            res.records.push(ExcursionRecord {
                j: res.records.len(),
                t_start: t_start_of(&res.records),
                t_ramp_end,
                t_end: s.t,
                peak_mass,
                peak_separation: peak_sep,
                hit_one: peak_mass >= 1.0,
                hit_x0: peak_sep >= cfg.x0,
            });
            peak_mass = 0.0;
            peak_sep = 0.0;
            t_ramp_end = f64::NAN;
        }
        if let Some(outcome) = decided {
            res.outcome = outcome;
            res.decision_time = s.t;
            break;
        }
        if res.records.len() >= cfg.max_excursions {
            res.decision_time = s.t;
            break;
        }
    }
    // V_k after the decision does not count.
    for v in res.vk_first.iter_mut() {
        if v.is_some_and(|t| t > res.decision_time) {
            *v = None;
        }
    }
    Ok(res)
}

/// Start of the next excursion: the end of the previous one, or 0.
fn t_start_of(records: &[ExcursionRecord]) -> f64 {
    records.last().map_or(0.0, |r| r.t_end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedConfig {
    pub grid: GridSpec,
    pub p: f64,
    pub b: f64,
    pub eps: f64,
    pub t_horizon: f64,
    /// Mass path sampling interval in steps (0 keeps only excursion ends).
    pub mass_every: u64,
}

impl SignedConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        open_interval("eps", self.eps, 0.0, 1.0)?;
        open_interval("p", self.p, 0.0, 0.5)?;
        positive("b", self.b)?;
        positive("t_horizon", self.t_horizon)?;
        if self.eps * self.b >= 1.0 {
            return Err(Error::Config("initial mass eps·b must be below 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignedResult {
    pub escaped: bool,
    pub escape_time: Option<f64>,
    /// Excursions started, including the one running at the end.
    pub excursion_count: usize,
    /// `(t, ⟨X_t,1⟩)` samples, with the sign of the running excursion.
    pub mass_path: Vec<(f64, f64)>,
    pub steps: u64,
}

/// Approximate solution of `∂X/∂t = ΔX/2 + |X|^p Ẇ` built from excursions
/// started at `(−1)^i εψ`, each run until its mass falls below the zero
/// threshold. Escapes when `|⟨X,1⟩|` reaches 1.
pub fn run_signed_excursions(seed: SeedSpec, cfg: &SignedConfig) -> Result<SignedResult> {
    cfg.validate()?;
    let grid = cfg.grid;
    let dx = grid.dx();
    let source = SourceFn::bump(&grid, cfg.b)?;
    let par = SpdeParams {
        p: cfg.p,
        src_scale: 0.0,
        source: None,
    };
    let mut stepper = SpdeStepper::new(grid);
    let mut noise = WhiteNoise::new(seed.with_stream(streams::SPDE_NOISE));
    let mut slice = NoiseSlice {
        step: 0,
        lo: 0,
        values: Vec::with_capacity(grid.n_cells),
    };
    let mut values = vec![0.0; grid.n_cells];
    let mut active = 0..0;
    let delta = grid.delta_mass();
    let mut res = SignedResult {
        escaped: false,
        escape_time: None,
        excursion_count: 0,
        mass_path: Vec::new(),
        steps: 0,
    };
    let mut t = 0.0;
    let mut sign = 1.0;
    let mut restart = true;
    while t < cfg.t_horizon {
        if restart {
            values.iter_mut().zip(&source.values).for_each(|(v, s)| *v = cfg.eps * s);
            active = source.support.clone();
            sign = if res.excursion_count.is_multiple_of(2) { 1.0 } else { -1.0 };
            res.excursion_count += 1;
            res.mass_path.push((t, sign * mass(&values, dx)));
            restart = false;
        }
        let region = stepper.region(&active, &par);
        slice.step = res.steps;
        slice.lo = region.start;
        slice.values.resize(region.len(), 0.0);
        noise.fill(res.steps, region.start, &mut slice.values);
        stepper.step(&mut values, &mut active, &par, &slice);
        res.steps += 1;
        t += grid.dt;
        let m = mass(&values[active.clone()], dx);
        if cfg.mass_every > 0 && res.steps.is_multiple_of(cfg.mass_every) {
            res.mass_path.push((t, sign * m));
        }
        if m >= 1.0 {
            res.escaped = true;
            res.escape_time = Some(t);
            res.mass_path.push((t, sign * m));
            break;
        }
        if m < delta {
            values[active.clone()].fill(0.0);
            active = 0..0;
            res.mass_path.push((t, 0.0));
            restart = true;
        }
    }
    Ok(res)
}
