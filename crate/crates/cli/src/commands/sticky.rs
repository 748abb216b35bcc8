//! `sde-sticky`: paths of `dX = b dt + X^p dB` with a sticky boundary at 0.
//!
//! `mode = hitting` writes `paths.csv` with replicate, first_level
//! (`zero`, `level` or empty), hit_time, steps; from `x_start` until 0 or
//! `level` is reached.
//!
//! `mode = occupation` writes `paths.csv` with replicate, final_value,
//! elapsed, occupation_time, occupation_fraction, local_time, driver_time,
//! identity_error, steps, boundary_events; from `x_start` over `[0, t_end]`.
//! The last four columns are empty for the Euler scheme.

use spdelab::noise::SeedSpec;
use spdelab::sde1d::{simulate_sde_euler, simulate_sticky_exact, PathSummary, ScaleFn, ScaleTable, StickyOptions};
use spdelab::stats::{aggregate, wilson};

use super::{par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{num, opt, Table};
use crate::{invalid, CliError, Gate, RunReport};

/// Relative tolerance of the identity `b · occupation = local time`, which
/// holds up to floating-point summation.
const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
enum Scheme {
    Exact,
    Euler,
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let (b, p) = (cfg.f64("b")?, cfg.f64("p")?);
    let scheme = match cfg.str("scheme") {
        "exact" => Scheme::Exact,
        "euler" => Scheme::Euler,
        other => return Err(CliError::Config(format!("scheme must be exact or euler, got '{other}'"))),
    };
    let hitting = match cfg.str("mode") {
        "hitting" => true,
        "occupation" => false,
        other => return Err(CliError::Config(format!("mode must be hitting or occupation, got '{other}'"))),
    };
    let x_start = cfg.f64("x_start")?;
    let level = cfg.f64("level")?;
    let t_end = cfg.f64("t_end")?;
    let dt = cfg.f64("dt")?;
    let scale = ScaleFn::new(b, p, 1.0).map_err(invalid)?;
    if !(x_start >= 0.0) || !(dt > 0.0) || !(t_end > 0.0) {
        return Err(CliError::Config(format!(
            "need x_start ≥ 0, dt > 0, t_end > 0; got {x_start}, {dt}, {t_end}"
        )));
    }
    if hitting && !(level > x_start) {
        return Err(CliError::Config(format!("level {level} must exceed x_start {x_start}")));
    }
    let table = ScaleTable::new(scale, cfg.get("table_nodes")?).map_err(invalid)?;
    if !(x_start < table.y_max()) || (hitting && !(level < table.y_max())) {
        return Err(CliError::Config(format!("start and level must lie below {}", table.y_max())));
    }

    let opts = if hitting {
        StickyOptions {
            levels: vec![0.0, level],
            stop_at_first_hit: true,
        }
    } else {
        StickyOptions::default()
    };
    let horizon = if hitting { f64::MAX } else { t_end };
    let paths = par_map(n, |i| {
        let seed = SeedSpec::new(seed, i, 0);
        match scheme {
            Scheme::Exact => simulate_sticky_exact(seed, &table, x_start, horizon, dt, &opts, |_, _| {}),
            Scheme::Euler => {
                // Euler runs on a fixed grid, so hitting runs need a finite horizon.
                let h = if hitting { t_end.max(1e3) } else { t_end };
                simulate_sde_euler(seed, b, p, x_start, h, dt, &opts)
            }
        }
    })?;

    let mut s = Summary::default();
    s.add("replicates", n);
    s.add("scheme", cfg.str("scheme"));
    s.add("mode", cfg.str("mode"));
    let (out, gates) = if hitting {
        hitting_report(&paths, &scale, x_start, level, scheme, &mut s)?
    } else {
        occupation_report(&paths, b, scheme, &mut s)?
    };
    Ok(RunReport {
        command: cfg.command,
        tables: vec![out],
        summary: s.0,
        gates,
    })
}

fn hitting_report(
    paths: &[PathSummary],
    scale: &ScaleFn,
    x: f64,
    level: f64,
    scheme: Scheme,
    s: &mut Summary,
) -> Result<(Table, Vec<Gate>), CliError> {
    let mut t = Table::new("paths", &["replicate", "first_level", "hit_time", "steps"]);
    let mut hits = 0u64;
    let mut undecided = 0u64;
    for (i, p) in paths.iter().enumerate() {
        let first = p.first_level();
        let label = match first {
            Some(0) => "zero",
            Some(_) => "level",
            None => "",
        };
        hits += u64::from(first == Some(1));
        undecided += u64::from(first.is_none());
        t.push(vec![
            i.to_string(),
            label.into(),
            opt(first.and_then(|j| p.level_hits[j])),
            p.steps.to_string(),
        ]);
    }
    let n = paths.len() as u64;
    let r = wilson(hits, n)?;
    let target = scale.eval(x)? / scale.eval(level)?;
    s.mc("p_level", &r);
    s.num("p_level_target", target);
    s.add("undecided", undecided);
    let mut gates = Vec::new();
    if scheme == Scheme::Exact {
        gates.push(Gate::new(
            "hitting_probability",
            (r.mean - target).abs() <= 3.0 * r.stderr,
            format!("{} ± {} vs s(x)/s(level) = {target}", r.mean, r.stderr),
        ));
    }
    Ok((t, gates))
}

fn occupation_report(
    paths: &[PathSummary],
    b: f64,
    scheme: Scheme,
    s: &mut Summary,
) -> Result<(Table, Vec<Gate>), CliError> {
    let mut t = Table::new(
        "paths",
        &[
            "replicate",
            "final_value",
            "elapsed",
            "occupation_time",
            "occupation_fraction",
            "local_time",
            "driver_time",
            "identity_error",
            "steps",
            "boundary_events",
        ],
    );
    let mut fractions = Vec::with_capacity(paths.len());
    let mut worst = 0.0f64;
    let mut within = true;
    for (i, p) in paths.iter().enumerate() {
        let err = p
            .local_time_driver
            .map(|l| (b * p.occupation_time_at_zero - l).abs() / l.max(f64::MIN_POSITIVE));
        if let Some(e) = err {
            worst = worst.max(e);
        }
        within &= p.occupation_time_at_zero <= p.elapsed;
        fractions.push(p.occupation_fraction());
        t.push(vec![
            i.to_string(),
            num(p.final_value),
            num(p.elapsed),
            num(p.occupation_time_at_zero),
            num(p.occupation_fraction()),
            opt(p.local_time_driver),
            opt(p.driver_time),
            opt(err),
            p.steps.to_string(),
            p.boundary_events.to_string(),
        ]);
    }
    let occ = aggregate(&fractions)?;
    s.mc("occupation_fraction", &occ);
    let mut gates = vec![
        Gate::new(
            "occupation_positive",
            occ.excludes_zero(),
            format!("95% CI ({}, {})", occ.ci95.0, occ.ci95.1),
        ),
        Gate::new("occupation_within_elapsed", within, "occupation ≤ elapsed on every path"),
    ];
    if scheme == Scheme::Exact {
        s.num("identity_max_error", worst);
        gates.push(Gate::new(
            "local_time_identity",
            worst <= IDENTITY_TOL,
            format!("max relative error {worst}"),
        ));
    }
    Ok((t, gates))
}
