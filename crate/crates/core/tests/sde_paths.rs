use spdelab::heat::{mass, Field, GridSpec, SourceFn, SpdeParams, SpdeStepper, DEFAULT_RATIO};
use spdelab::holder::ral_constant;
use spdelab::noise::{streams, SeedSpec, WhiteNoise};
use spdelab::sde1d::{
    simulate_sde_euler, simulate_sticky_exact, time_change_tau, ScaleFn, ScaleTable, StickyOptions,
};
use spdelab::stats::{wilson, Moments};

#[test]
fn euler_mean_follows_the_drift() {
    let (b, x0, t) = (1.0, 0.5, 1.0);
    let m: Moments = (0..4000)
        .map(|i| {
            simulate_sde_euler(SeedSpec::new(21, i, 0), b, 0.25, x0, t, 1e-3, &StickyOptions::default())
                .unwrap()
                .final_value
        })
        .collect();
    let r = m.result().unwrap();
    assert!(r.within(x0 + b * t, 3.0), "{} ± {}", r.mean, r.stderr);
}

#[test]
fn exact_hitting_probability_matches_scale_ratio() {
    let s = ScaleFn::new(1.0, 0.25, 1.0).unwrap();
    let table = ScaleTable::new(s, 2048).unwrap();
    let opts = StickyOptions {
        levels: vec![0.0, 1.0],
        stop_at_first_hit: true,
    };
    let n = 3000;
    let hits = (0..n)
        .filter(|&i| {
            simulate_sticky_exact(SeedSpec::new(22, i, 0), &table, 0.1, 1e9, 1e-4, &opts, |_, _| {})
                .unwrap()
                .first_level()
                == Some(1)
        })
        .count() as u64;
    let r = wilson(hits, n).unwrap();
    let target = s.eval(0.1).unwrap() / s.eval(1.0).unwrap();
    assert!(r.within(target, 3.0), "{} vs {target}", r.mean);
}

/// Not a gate: the two simulators' hitting probabilities are printed side
/// by side.
#[test]
fn euler_and_exact_hitting_are_reported() {
    let table = ScaleTable::new(ScaleFn::new(1.0, 0.25, 1.0).unwrap(), 2048).unwrap();
    let opts = StickyOptions {
        levels: vec![0.0, 1.0],
        stop_at_first_hit: true,
    };
    let n = 1000;
    let exact = (0..n)
        .filter(|&i| {
            simulate_sticky_exact(SeedSpec::new(23, i, 0), &table, 0.1, 1e9, 1e-4, &opts, |_, _| {})
                .unwrap()
                .first_level()
                == Some(1)
        })
        .count() as u64;
    for dt in [1e-3, 1e-4] {
        let euler = (0..n)
            .filter(|&i| {
                simulate_sde_euler(SeedSpec::new(24, i, 0), 1.0, 0.25, 0.1, 1e3, dt, &opts)
                    .unwrap()
                    .first_level()
                    == Some(1)
            })
            .count() as u64;
        let (a, b) = (wilson(exact, n).unwrap(), wilson(euler, n).unwrap());
        println!("dt {dt}: exact {:.4} {:?}  euler {:.4} {:?}", a.mean, a.ci95, b.mean, b.ci95);
        assert!(b.mean > 0.0 && b.mean < 1.0);
    }
}

#[test]
fn tau_derivative_is_at_most_one_along_an_spde_path() {
    let p = 0.25;
    let k = 8.0;
    let grid = GridSpec::new(4.0, 256, DEFAULT_RATIO).unwrap();
    let source = SourceFn::bump(&grid, 1.0).unwrap();
    let par = SpdeParams {
        p,
        src_scale: 1.0,
        source: Some(&source),
    };
    let mut stepper = SpdeStepper::new(grid);
    let mut noise = WhiteNoise::new(SeedSpec::new(25, 0, streams::SPDE_NOISE));
    let mut values = vec![0.0; grid.n_cells];
    let mut active = 0..0;
    let mut masses = vec![0.0];
    let mut qv = Vec::new();
    for step in 0..4000u64 {
        let region = stepper.region(&active, &par);
        let slice = noise.slice(step, region.start, region.end);
        let st = stepper.step(&mut values, &mut active, &par, &slice);
        qv.push(st.qv_rate);
        masses.push(mass(&values, grid.dx()));
        if step % 64 == 0 {
            assert!(Field::from_values(grid, values.clone()).unwrap().holder14() <= k);
        }
    }
    let tau = time_change_tau(&masses, &qv, grid.dt, ral_constant(0.25, k).unwrap(), (p + 2.0) / 5.0).unwrap();
    assert!(tau.max_tau_prime() <= 1.0 + 1e-3, "{}", tau.max_tau_prime());
    assert!(tau.horizon() >= 4000.0 * grid.dt);
}
