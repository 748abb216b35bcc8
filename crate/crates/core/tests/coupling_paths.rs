use spdelab::coupling::{
    run_separation_trial, run_signed_excursions, CoupleConfig, Coupler, Phase, Role, SignedConfig,
};
use spdelab::heat::{GridSpec, DEFAULT_RATIO};
use spdelab::noise::{streams, SeedSpec, WhiteNoise};
use spdelab::stats::Moments;

fn config() -> CoupleConfig {
    let grid = GridSpec::new(4.0, 256, DEFAULT_RATIO).unwrap();
    CoupleConfig::new(grid, 0.25, 1.0, 0.05, 0.5)
}

/// Replays the difference `D = dominant − dominated` through
/// `D' = D + λΔD + [(Y + D)^p − Y^p]√(dt/dx) ξ` on cells where both fields
/// took a plain Euler step.
#[test]
fn difference_follows_its_own_dynamics_on_untamed_cells() {
    let cfg = config();
    let mut c = Coupler::new(cfg.clone()).unwrap();
    let mut s = c.initial_state();
    let mut noise = WhiteNoise::new(SeedSpec::new(3, 0, streams::SPDE_NOISE));
    let grid = cfg.grid;
    let (dx, dt) = (grid.dx(), grid.dt);
    let lambda = dt / (2.0 * dx * dx);
    let scale = (dt / dx).sqrt();
    let cut = 8.5;
    let mut compared = 0;
    for _ in 0..4000 {
        let region = c.noise_region(&s);
        let slice = noise.slice(s.noise_step, region.start, region.end);
        let before = s.clone();
        let report = c.step(&mut s, &slice);
        let Phase::Stochastic { dominant } = before.phase else { continue };
        if report.excursion_finished {
            continue;
        }
        let (d0, y0) = (before.field(dominant).values.clone(), before.field(dominant.other()).values.clone());
        let (d1, y1) = (&s.field(dominant).values, &s.field(dominant.other()).values);
        for i in region.clone() {
            let lap = |v: &[f64]| {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < v.len() { v[i + 1] } else { 0.0 };
                l - 2.0 * v[i] + r
            };
            let untamed = |v: &[f64]| {
                let z = v[i] + lambda * lap(v) + dt * c.source.values[i];
                let sigma = v[i].powf(cfg.p) * scale;
                sigma == 0.0 || z == 0.0 || z / sigma >= cut
            };
            if !(untamed(&d0) && untamed(&y0)) || d1[i] == 0.0 || y1[i] == 0.0 || d1[i] == y1[i] {
                continue;
            }
            let diff0: Vec<f64> = d0.iter().zip(&y0).map(|(a, b)| a - b).collect();
            let predicted = diff0[i]
                + lambda * lap(&diff0)
                + (d0[i].powf(cfg.p) - y0[i].powf(cfg.p)) * scale * slice.at(i);
            let actual = d1[i] - y1[i];
            assert!((predicted - actual).abs() <= 1e-12 * (1.0 + d1[i]), "cell {i}: {predicted} vs {actual}");
            compared += 1;
        }
    }
    assert!(compared > 1000, "{compared}");
}

#[test]
fn ramp_and_phase_entry() {
    let cfg = config();
    let mut c = Coupler::new(cfg.clone()).unwrap();
    let mut s = c.initial_state();
    let mut noise = WhiteNoise::new(SeedSpec::new(4, 0, streams::SPDE_NOISE));
    let mut entries = 0;
    let mut last_ramp_start = 0.0;
    for _ in 0..20_000 {
        let region = c.noise_region(&s);
        let slice = noise.slice(s.noise_step, region.start, region.end);
        let report = c.step(&mut s, &slice);
        if let Phase::Ramp { owner } = s.phase {
            let (mo, mz) = (s.field(owner).mass(), s.field(owner.other()).mass());
            assert_eq!(mz, 0.0);
            assert!((mo - 2.0 * (s.t - s.t_start)).abs() < 1e-9);
            last_ramp_start = s.t_start;
        }
        if report.ramp_finished {
            let (mx, my) = s.masses();
            assert!(((mx - my).abs() - 2.0 * cfg.eps).abs() < 1e-9);
            assert!((s.t - last_ramp_start - cfg.eps).abs() < 1e-12);
            assert!(s.ledger == 0.0 || s.ledger == cfg.eps);
            entries += 1;
        }
        assert!(s.ledger.abs() <= cfg.eps * (1.0 + 1e-9));
    }
    assert!(entries >= 2, "{entries}");
}

#[test]
fn trial_records_are_consistent() {
    let cfg = config();
    for i in 0..10 {
        let r = run_separation_trial(SeedSpec::new(5, i, 0), &cfg).unwrap();
        assert_eq!(r.ledger_violations, 0);
        assert_eq!(r.inequality.violations, 0);
        assert!(r.tau_prime_max <= 1.0 + 1e-3);
        for (j, e) in r.records.iter().enumerate() {
            assert_eq!(Role::of_excursion(j), if j % 2 == 0 { Role::X } else { Role::Y });
            if e.t_ramp_end.is_finite() {
                assert!((e.t_ramp_end - e.t_start - cfg.eps).abs() < 1e-9);
            }
            let finished = j + 1 < r.records.len();
            if finished {
                assert!(e.t_end - e.t_start >= cfg.eps - 1e-12);
            }
            assert!(e.peak_mass >= 0.0 && e.peak_separation >= 0.0);
        }
    }
}

/// Excursions of the mass martingale from `ε`: the first one reaching 1
/// has a geometric index with mean `1/ε`.
#[test]
fn surrogate_escape_index_is_geometric() {
    let eps = 0.1;
    let q = 0.45;
    let m: Moments = (0..400u64)
        .map(|r| {
            let mut j = 0u64;
            loop {
                j += 1;
                let seed = SeedSpec::new(6, r * 10_000 + j, 0);
                if hits_one(seed, q, eps) {
                    return j as f64;
                }
            }
        })
        .collect();
    let mean = m.mean();
    assert!((mean * eps - 1.0).abs() < 0.2, "{mean}");
}

fn hits_one(seed: SeedSpec, q: f64, y0: f64) -> bool {
    // dY = Y^q dB with relative steps, stopped at 1 or at the floor.
    let mut normals = seed.with_stream(streams::PATH).normals();
    let mut y = y0;
    loop {
        if y >= 1.0 {
            return true;
        }
        if y <= 1e-8 {
            return false;
        }
        let h = 0.01 * y.powf(2.0 - 2.0 * q);
        y += y.powf(q) * h.sqrt() * normals.normal();
    }
}

#[test]
fn signed_escape_is_monotone_in_horizon() {
    let grid = GridSpec::new(4.0, 128, DEFAULT_RATIO).unwrap();
    let cfg = SignedConfig {
        grid,
        p: 0.25,
        b: 1.0,
        eps: 0.25,
        t_horizon: 64.0,
        mass_every: 0,
    };
    let runs: Vec<_> = (0..40)
        .map(|i| run_signed_excursions(SeedSpec::new(7, i, 0), &cfg).unwrap())
        .collect();
    let by = |t: f64| runs.iter().filter(|r| r.escape_time.is_some_and(|e| e <= t)).count();
    let (a, b, c) = (by(4.0), by(16.0), by(64.0));
    assert!(a <= b && b <= c && c > 0, "{a} {b} {c}");
    for r in &runs {
        assert!(r.excursion_count >= 1);
        for w in r.mass_path.windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
    }
}
