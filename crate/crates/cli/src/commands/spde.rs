//! `simulate-spde`: independent SPDE paths from the zero field.
//!
//! `runs.csv`: replicate, final_mass, final_sup, holder14, steps, noisy,
//! tamed, clipped, boundary_max, inequality_checked, inequality_violations.
//! `series.csv` (when `record_every > 0`): replicate, t, mass, sup, holder14.

use spdelab::heat::{simulate_spde, InequalityTally, SourceFn, SpdeConfig};
use spdelab::noise::SeedSpec;
use spdelab::stats::Moments;

use super::{grid, par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{num, Table};
use crate::{invalid, CliError, Gate, RunReport};

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let src_scale = cfg.f64("src_scale")?;
    if ![0.0, 1.0, 2.0].contains(&src_scale) {
        return Err(CliError::Config(format!("src_scale must be 0, 1 or 2, got {src_scale}")));
    }
    let sc = SpdeConfig {
        grid: grid(cfg)?,
        p: cfg.f64("p")?,
        b: cfg.f64("b")?,
        src_scale,
        t_end: cfg.f64("t_end")?,
        record_every: cfg.get("record_every")?,
        ks: cfg.list("k_list")?,
    };
    if !(sc.p > 0.0 && sc.p < 1.0) || !(sc.b > 0.0) || !(sc.t_end > 0.0) {
        return Err(CliError::Config(format!(
            "need 0 < p < 1, b > 0, t_end > 0; got p = {}, b = {}, t_end = {}",
            sc.p, sc.b, sc.t_end
        )));
    }
    if src_scale > 0.0 {
        SourceFn::bump(&sc.grid, sc.b).map_err(invalid)?;
    }

    let runs = par_map(n, |i| simulate_spde(SeedSpec::new(seed, i, 0), &sc))?;

    let mut table = Table::new(
        "runs",
        &[
            "replicate",
            "final_mass",
            "final_sup",
            "holder14",
            "steps",
            "noisy",
            "tamed",
            "clipped",
            "boundary_max",
            "inequality_checked",
            "inequality_violations",
        ],
    );
    let mut series = Table::new("series", &["replicate", "t", "mass", "sup", "holder14"]);
    let mut masses = Moments::new();
    let mut tally = InequalityTally::default();
    let (mut noisy, mut tamed, mut clipped) = (0u64, 0u64, 0u64);
    let mut boundary = 0.0f64;
    for (i, r) in runs.iter().enumerate() {
        let last = r.records.last().copied();
        let m = r.final_field.mass();
        masses.push(m);
        tally.merge(&r.inequality);
        noisy += r.stats.noisy;
        tamed += r.stats.tamed;
        clipped += r.stats.clipped;
        boundary = boundary.max(r.boundary_max);
        table.push(vec![
            i.to_string(),
            num(m),
            num(r.final_field.sup()),
            num(last.map_or(0.0, |l| l.holder14)),
            r.steps.to_string(),
            r.stats.noisy.to_string(),
            r.stats.tamed.to_string(),
            r.stats.clipped.to_string(),
            num(r.boundary_max),
            r.inequality.checked.to_string(),
            r.inequality.violations.to_string(),
        ]);
        if sc.record_every > 0 {
            for rec in &r.records {
                series.push(vec![i.to_string(), num(rec.t), num(rec.mass), num(rec.sup), num(rec.holder14)]);
            }
        }
    }

    let expected = sc.b * sc.t_end * src_scale;
    let mass = masses.result()?;
    let (steps, dt) = sc.grid.steps_for(sc.t_end);
    let mut s = Summary::default();
    s.add("replicates", n);
    s.num("dx", sc.grid.dx());
    s.num("dt", dt);
    s.add("steps", steps);
    s.num("expected_mass", expected);
    s.mc("mass", &mass);
    s.num("mass_variance", masses.variance());
    s.num("truncation_bound", runs.first().map_or(0.0, |r| r.truncation_bound));
    s.num("boundary_max", boundary);
    s.add("noisy_updates", noisy);
    s.add("tamed_updates", tamed);
    s.add("clipped_updates", clipped);
    s.add("inequality_checked", tally.checked);
    s.add("inequality_violations", tally.violations);
    s.num("inequality_min_ratio", tally.min_ratio);

    let mut gates = vec![Gate::new(
        "field_inequality",
        tally.violations == 0,
        format!("{} violations in {} checks", tally.violations, tally.checked),
    )];
    if n >= 2 {
        gates.push(Gate::new(
            "mass_mean",
            (mass.mean - expected).abs() <= 3.0 * mass.stderr,
            format!("{} ± {} vs {expected}", mass.mean, mass.stderr),
        ));
    }
    let mut tables = vec![table];
    if sc.record_every > 0 {
        tables.push(series);
    }
    Ok(RunReport {
        command: cfg.command,
        tables,
        summary: s.0,
        gates,
    })
}
