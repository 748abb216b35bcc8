//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array` so the page needs no glue
//! beyond what `wasm-bindgen` generates. Errors come back as strings. The
//! plain functions behind them are usable (and tested) natively.

use spdelab::heat::{simulate_spde, GridSpec, SpdeConfig};
use spdelab::holder::{generate_holder_fn, ral_check, HolderClass};
use spdelab::noise::SeedSpec;
use spdelab::sde1d::ScaleFn;
use spdelab::{Error, Result};
use wasm_bindgen::prelude::*;

/// Generates one Hölder(β, C) function supported in `[−w, w]` and checks the
/// integral inequality at α = 0.1, …, 0.9.
///
/// Layout: `[n, x_0, dx, f_0 … f_{n−1}, (lhs, rhs, holds) × 9]`.
pub fn lemma_values(seed: u64, beta: f64, c: f64, w: f64) -> Result<Vec<f64>> {
    let f = generate_holder_fn(SeedSpec::new(seed, 0, 0), HolderClass::new(beta, c)?, w)?;
    let mut out = vec![f.values.len() as f64, f.x0, f.dx];
    out.extend_from_slice(&f.values);
    for i in 1..=9 {
        let r = ral_check(&f, i as f64 / 10.0)?;
        out.extend([r.lhs, r.rhs, if r.holds { 1.0 } else { 0.0 }]);
    }
    Ok(out)
}

/// `s(x)/s(level)` for `dX = b dt + X^p dB` on `n` points of `[0, x_max]`:
/// the probability of reaching `level` before 0.
///
/// Layout: `[x_0, P_0, x_1, P_1, …]`.
pub fn hitting_values(b: f64, p: f64, level: f64, x_max: f64, n: u32) -> Result<Vec<f64>> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain(format!("p = {p} outside (0, 1/2)")));
    }
    let s = ScaleFn::new(b, p, 1.0)?;
    if !(level > 0.0 && x_max > 0.0) {
        return Err(Error::Domain("level and x_max must be positive".into()));
    }
    let top = s.eval(level)?;
    let n = n.max(2);
    let mut out = Vec::with_capacity(2 * n as usize);
    for i in 0..n {
        let x = x_max * f64::from(i) / f64::from(n - 1);
        out.push(x);
        out.push((s.eval(x)? / top).min(1.0));
    }
    Ok(out)
}

/// One SPDE path from the zero field with source `b·ψ`, about 200 rows.
///
/// Layout: `[rows, (t, mass, sup) × rows, n_cells, values…]`.
pub fn spde_values(seed: u64, p: f64, b: f64, t_end: f64, n_cells: u32, half_width: f64) -> Result<Vec<f64>> {
    let grid = GridSpec::new(half_width, n_cells as usize, 0.25)?;
    let steps = grid.steps_for(t_end).0;
    let cfg = SpdeConfig {
        grid,
        p,
        b,
        src_scale: 1.0,
        t_end,
        record_every: (steps / 200).max(1),
        ks: vec![],
    };
    let run = simulate_spde(SeedSpec::new(seed, 0, 0), &cfg)?;
    let mut out = Vec::with_capacity(3 * run.records.len() + 2 + n_cells as usize);
    out.push(run.records.len() as f64);
    for r in &run.records {
        out.extend([r.t, r.mass, r.sup]);
    }
    out.push(run.final_field.values.len() as f64);
    out.extend_from_slice(&run.final_field.values);
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn lemma_demo(seed: u32, beta: f64, c: f64, w: f64) -> std::result::Result<Vec<f64>, JsError> {
    lemma_values(u64::from(seed), beta, c, w).map_err(js)
}

#[wasm_bindgen]
pub fn hitting_curve(b: f64, p: f64, level: f64, x_max: f64, n: u32) -> std::result::Result<Vec<f64>, JsError> {
    hitting_values(b, p, level, x_max, n).map_err(js)
}

#[wasm_bindgen]
pub fn spde_path(
    seed: u32,
    p: f64,
    b: f64,
    t_end: f64,
    n_cells: u32,
    half_width: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    spde_values(u64::from(seed), p, b, t_end, n_cells, half_width).map_err(js)
}
