//! `signed-excursions`: the signed excursion construction without drift.
//!
//! `runs.csv`: replicate, escaped, escape_time, excursion_count, steps.
//! `mass.csv` (when `mass_every > 0`): replicate, t, mass.

use spdelab::coupling::{run_signed_excursions, SignedConfig};
use spdelab::noise::SeedSpec;
use spdelab::stats::wilson;

use super::{grid, par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{flag, num, opt, Table};
use crate::{invalid, CliError, Gate, RunReport};

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let mut horizons = cfg.list("t_list")?;
    horizons.sort_by(f64::total_cmp);
    let sc = SignedConfig {
        grid: grid(cfg)?,
        p: cfg.f64("p")?,
        b: cfg.f64("b")?,
        eps: cfg.f64("eps")?,
        t_horizon: *horizons.last().unwrap(),
        mass_every: cfg.get("mass_every")?,
    };
    sc.validate().map_err(invalid)?;
    spdelab::heat::SourceFn::bump(&sc.grid, sc.b).map_err(invalid)?;

    let runs = par_map(n, |i| run_signed_excursions(SeedSpec::new(seed, i, 0), &sc))?;

    let mut table = Table::new("runs", &["replicate", "escaped", "escape_time", "excursion_count", "steps"]);
    let mut mass = Table::new("mass", &["replicate", "t", "mass"]);
    for (i, r) in runs.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            flag(r.escaped),
            opt(r.escape_time),
            r.excursion_count.to_string(),
            r.steps.to_string(),
        ]);
        if sc.mass_every > 0 {
            for &(t, m) in &r.mass_path {
                mass.push(vec![i.to_string(), num(t), num(m)]);
            }
        }
    }
    let mut s = Summary::default();
    s.add("replicates", n);
    s.num("delta_mass", sc.grid.delta_mass());
    let mut counts = Vec::new();
    for &t in &horizons {
        let c = runs.iter().filter(|r| r.escape_time.is_some_and(|e| e <= t)).count() as u64;
        s.mc(&format!("escaped_by_{t}"), &wilson(c, n)?);
        counts.push(c);
    }
    let started: usize = runs.iter().map(|r| r.excursion_count).sum();
    s.num("mean_excursions", started as f64 / n as f64);
    let gates = vec![
        Gate::new(
            "escape_monotone",
            counts.windows(2).all(|w| w[0] <= w[1]),
            format!("escapes {counts:?} by T = {horizons:?}"),
        ),
        Gate::new(
            "excursion_started",
            runs.iter().all(|r| r.excursion_count >= 1),
            "every run starts at least one excursion",
        ),
    ];
    let mut tables = vec![table];
    if sc.mass_every > 0 {
        tables.push(mass);
    }
    Ok(RunReport {
        command: cfg.command,
        tables,
        summary: s.0,
        gates,
    })
}
