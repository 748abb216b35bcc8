use spdelab::heat::{heat_step, ramp_field, spde_step, Field, GridSpec, SourceFn, DEFAULT_RATIO};
use spdelab::holder::{holder_quotient, PairSchedule};
use spdelab::noise::{white_noise_slice, SeedSpec};

fn evolve(mut f: Field, steps: usize) -> Field {
    for _ in 0..steps {
        f = heat_step(&f).unwrap();
    }
    f
}

/// Sup-norm distance between `n` heat steps from a unit delta and the
/// Gaussian kernel at the same time.
fn kernel_error(n_cells: usize, t: f64) -> f64 {
    let grid = GridSpec::new(5.0, n_cells, DEFAULT_RATIO).unwrap();
    let (steps, dt) = grid.steps_for(t);
    let grid = GridSpec::with_dt(5.0, n_cells, dt).unwrap();
    let c = grid.cell_of(0.0);
    let f = evolve(Field::delta(grid, grid.x(c), 1.0), steps as usize);
    (0..n_cells)
        .map(|i| {
            let x = grid.x(i) - grid.x(c);
            let exact = (-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            (f.values[i] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn delta_converges_to_gaussian_kernel_at_second_order() {
    let coarse = kernel_error(100, 0.5);
    let fine = kernel_error(200, 0.5);
    assert!(coarse < 5e-3, "{coarse}");
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn interior_bump_conserves_mass() {
    let grid = GridSpec::new(10.0, 400, DEFAULT_RATIO).unwrap();
    let src = SourceFn::bump(&grid, 1.0).unwrap();
    let f0 = Field::from_values(grid, src.values.clone()).unwrap();
    let (steps, _) = grid.steps_for(1.0);
    let f = evolve(f0.clone(), steps as usize);
    assert!((f.mass() - f0.mass()).abs() < 1e-12);
    assert!(f.boundary_max() < 1e-12);
}

#[test]
fn zero_stays_zero() {
    let grid = GridSpec::new(2.0, 64, DEFAULT_RATIO).unwrap();
    let f = heat_step(&Field::zeros(grid)).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
    let noise = white_noise_slice(SeedSpec::new(1, 0, 0), 0, 64).unwrap();
    let (g, _) = spde_step(&Field::zeros(grid), 0.0, 0.25, None, &noise).unwrap();
    assert!(g.values.iter().all(|&v| v == 0.0));
}

#[test]
fn unstable_ratio_is_a_config_error() {
    assert!(GridSpec::new(1.0, 32, 0.6).is_err());
}

#[test]
fn ramp_mass_and_bounds() {
    let grid = GridSpec::new(10.0, 1024, DEFAULT_RATIO).unwrap();
    let src = SourceFn::bump(&grid, 1.0).unwrap();
    let eps = 0.05;
    assert_eq!(ramp_field(&src, 0.0, &grid).unwrap().mass(), 0.0);
    let r = ramp_field(&src, eps, &grid).unwrap();
    assert!((r.mass() - 2.0 * eps).abs() < 1e-8, "{}", r.mass());
    assert!(r.sup() <= 2.0 * eps * src.sup * (1.0 + 1e-12));
    assert!(r.mass() <= 4.0 * eps.sqrt());
    let h = holder_quotient(&r.values, grid.dx(), 0.25, PairSchedule::Auto);
    assert!(h <= 4.0 * src.sup.max(src.sup_deriv), "{h}");
}
