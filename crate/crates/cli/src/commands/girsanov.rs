//! `girsanov-survival`: survival of `dY = Y^q dB` absorbed at 0.
//!
//! `times.csv`: replicate, absorption_time (empty when the path survives the
//! largest horizon). `survival.csv`: t, survival, ci_lo, ci_hi, exact.
//!
//! The scaling check compares `T₀` from `y0` with `ε^{−2(1−q)} T₀` from
//! `ε y0`, both censored at the largest horizon, over the first
//! `ks_replicates` replicates.

use spdelab::noise::{streams, SeedSpec};
use spdelab::sde1d::{absorption_time, survival_exact, GirsanovConfig};
use spdelab::sde1d::girsanov::survival_from_times;
use spdelab::stats::ks_distance;

use super::{par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{num, Table};
use crate::{invalid, CliError, Gate, RunReport};

/// Allowed distance between the fitted and the theoretical exponent.
const SLOPE_TOL: f64 = 0.1;

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let mut t_list = cfg.list("t_list")?;
    t_list.sort_by(f64::total_cmp);
    let mut gc = GirsanovConfig::new(cfg.f64("q")?, cfg.f64("y0")?, t_list.clone());
    gc.eta = cfg.f64("eta")?;
    gc.y_floor = cfg.f64("y_floor")?;
    gc.validate().map_err(invalid)?;
    if t_list.len() < 2 {
        return Err(CliError::Config("t_list needs at least two horizons for the slope".into()));
    }
    let eps = cfg.f64("scale_eps")?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Config(format!("scale_eps must lie in (0, 1), got {eps}")));
    }
    let n_ks: u64 = cfg.get::<u64>("ks_replicates")?.min(n);
    let horizon = gc.horizon();
    let factor = eps.powf(2.0 * (1.0 - gc.q));

    let pairs = par_map(n, |i| {
        let base = SeedSpec::new(seed, i, 0);
        let t = absorption_time(base.with_stream(streams::PATH), gc.q, gc.y0, horizon, gc.eta, gc.y_floor);
        let scaled = (i < n_ks).then(|| {
            absorption_time(
                base.with_stream(streams::SCALED_PATH),
                gc.q,
                eps * gc.y0,
                horizon * factor,
                gc.eta,
                gc.y_floor,
            )
            .map_or(f64::INFINITY, |t| t / factor)
        });
        Ok((t.unwrap_or(f64::INFINITY), scaled))
    })?;
    let times: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let scaled: Vec<f64> = pairs.iter().filter_map(|p| p.1).collect();

    let res = survival_from_times(&times, &t_list)?;
    let mut tt = Table::new("times", &["replicate", "absorption_time"]);
    for (i, &t) in times.iter().enumerate() {
        tt.push(vec![i.to_string(), if t.is_finite() { num(t) } else { String::new() }]);
    }
    let mut st = Table::new("survival", &["t", "survival", "ci_lo", "ci_hi", "exact"]);
    for (t, r) in &res.survival {
        st.push(vec![
            num(*t),
            num(r.mean),
            num(r.ci95.0),
            num(r.ci95.1),
            num(survival_exact(gc.q, gc.y0, *t)?),
        ]);
    }
    let ks = ks_distance(&times[..scaled.len()], &scaled)?;
    let target = -1.0 / (2.0 * (1.0 - gc.q));

    let mut s = Summary::default();
    s.add("replicates", n);
    s.num("slope", res.slope.slope);
    s.num("slope_stderr", res.slope.stderr);
    s.num("slope_target", target);
    s.add("ks_replicates", scaled.len());
    s.num("ks_statistic", ks.statistic);
    s.num("ks_critical", ks.critical);
    let monotone = res.survival.windows(2).all(|w| w[1].1.mean <= w[0].1.mean);
    let gates = vec![
        Gate::new(
            "slope",
            (res.slope.slope - target).abs() <= SLOPE_TOL,
            format!("{} vs {target}", res.slope.slope),
        ),
        Gate::new("survival_monotone", monotone, "survival nonincreasing in T"),
        Gate::new(
            "scaling_ks",
            ks.pass,
            format!("D = {} against {} at alpha = 0.01", ks.statistic, ks.critical),
        ),
    ];
    Ok(RunReport {
        command: cfg.command,
        tables: vec![tt, st],
        summary: s.0,
        gates,
    })
}
