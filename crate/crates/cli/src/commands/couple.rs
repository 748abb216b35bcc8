//! `couple`: separation trials of the excursion pair.
//!
//! `trials.csv`: replicate, outcome, decision_time, n_excursions,
//! holder_max, vk_<k> for each k of `k_list` (empty when not reached),
//! tau_prime_max, ledger_max_ratio, ledger_violations,
//! max_violation_fraction, inequality_violations, steps.
//! `excursions.csv`: replicate, j, t_start, t_ramp_end, t_end, peak_mass,
//! peak_separation, hit_one, hit_x0.

use spdelab::coupling::{default_budget, run_separation_trial, CoupleConfig, Coupler, TrialOutcome};
use spdelab::heat::InequalityTally;
use spdelab::noise::SeedSpec;
use spdelab::stats::wilson;

use super::{grid, par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{flag, num, opt, Table};
use crate::{invalid, CliError, Gate, RunReport};

/// `τ'` may exceed 1 by this much before the gate fails.
const TAU_SLACK: f64 = 1e-3;

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let mut cc = CoupleConfig::new(grid(cfg)?, cfg.f64("p")?, cfg.f64("b")?, cfg.f64("eps")?, cfg.f64("x0")?);
    cc.k = cfg.f64("k")?;
    cc.ks = cfg.list("k_list")?;
    cc.holder_every = cfg.get("holder_every")?;
    let budget: usize = cfg.get("max_excursions")?;
    cc.max_excursions = if budget == 0 { default_budget(cc.eps) } else { budget };
    Coupler::new(cc.clone()).map_err(invalid)?;

    let trials = par_map(n, |i| run_separation_trial(SeedSpec::new(seed, i, 0), &cc))?;

    let mut header: Vec<String> = ["replicate", "outcome", "decision_time", "n_excursions", "holder_max"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(cc.ks.iter().map(|k| format!("vk_{k}")));
    header.extend(
        [
            "tau_prime_max",
            "ledger_max_ratio",
            "ledger_violations",
            "max_violation_fraction",
            "inequality_violations",
            "steps",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut table = Table {
        name: "trials".into(),
        header,
        rows: Vec::new(),
    };
    let mut exc = Table::new(
        "excursions",
        &[
            "replicate",
            "j",
            "t_start",
            "t_ramp_end",
            "t_end",
            "peak_mass",
            "peak_separation",
            "hit_one",
            "hit_x0",
        ],
    );
    let (mut separated, mut hit_one, mut budget_out) = (0u64, 0u64, 0u64);
    let mut vk = vec![0u64; cc.ks.len()];
    let (mut tau_max, mut tau_checks) = (0.0f64, 0u64);
    let (mut ledger_viol, mut ledger_max) = (0u64, 0.0f64);
    let (mut viol_frac, mut holder_max) = (0.0f64, 0.0f64);
    let mut tally = InequalityTally::default();
    let mut excursions = 0usize;
    for (i, r) in trials.iter().enumerate() {
        match r.outcome {
            TrialOutcome::Separated => separated += 1,
            TrialOutcome::HitOne => hit_one += 1,
            TrialOutcome::Budget => budget_out += 1,
        }
        for (j, c) in vk.iter_mut().enumerate() {
            *c += u64::from(r.vk_flagged(j));
        }
        tau_max = tau_max.max(r.tau_prime_max);
        holder_max = holder_max.max(r.holder_max);
        tau_checks += r.tau_checks;
        ledger_viol += r.ledger_violations;
        ledger_max = ledger_max.max(r.ledger_max_ratio);
        viol_frac = viol_frac.max(r.max_violation_fraction);
        tally.merge(&r.inequality);
        excursions += r.n_excursions();

        let mut row = vec![
            i.to_string(),
            r.outcome.as_str().into(),
            num(r.decision_time),
            r.n_excursions().to_string(),
            num(r.holder_max),
        ];
        row.extend(r.vk_first.iter().map(|v| opt(*v)));
        row.extend([
            num(r.tau_prime_max),
            num(r.ledger_max_ratio),
            r.ledger_violations.to_string(),
            num(r.max_violation_fraction),
            r.inequality.violations.to_string(),
            r.steps.to_string(),
        ]);
        table.push(row);
        for e in &r.records {
            exc.push(vec![
                i.to_string(),
                e.j.to_string(),
                num(e.t_start),
                num(e.t_ramp_end),
                num(e.t_end),
                num(e.peak_mass),
                num(e.peak_separation),
                flag(e.hit_one),
                flag(e.hit_x0),
            ]);
        }
    }

    let sep = wilson(separated, n)?;
    let rates: Vec<f64> = vk.iter().map(|&c| c as f64 / n as f64).collect();
    let mut s = Summary::default();
    s.add("trials", n);
    s.num("delta_mass", cc.grid.delta_mass());
    s.add("max_excursions", cc.max_excursions);
    s.add("separated", separated);
    s.add("hit_one", hit_one);
    s.add("budget", budget_out);
    s.mc("p_separated", &sep);
    s.num("mean_excursions", excursions as f64 / n as f64);
    for (k, r) in cc.ks.iter().zip(&rates) {
        s.num(format!("vk_rate_{k}"), *r);
    }
    s.num("holder_max", holder_max);
    s.num("tau_prime_max", tau_max);
    s.add("tau_checks", tau_checks);
    s.add("ledger_violations", ledger_viol);
    s.num("ledger_max_ratio", ledger_max);
    s.num("max_violation_fraction", viol_frac);
    s.add("inequality_checked", tally.checked);
    s.add("inequality_violations", tally.violations);

    let mut order: Vec<(f64, f64)> = cc.ks.iter().copied().zip(rates.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vk_monotone = order.windows(2).all(|w| w[1].1 <= w[0].1);
    let gates = vec![
        Gate::new(
            "separation_positive",
            sep.ci95.0 > 0.0,
            format!("{separated}/{n}, Wilson 95% CI ({}, {})", sep.ci95.0, sep.ci95.1),
        ),
        Gate::new(
            "ledger_bound",
            ledger_viol == 0,
            format!("max |A|/(eps psi) = {ledger_max}"),
        ),
        Gate::new(
            "tau_prime",
            tau_max <= 1.0 + TAU_SLACK,
            format!("max tau' = {tau_max} over {tau_checks} steps"),
        ),
        Gate::new(
            "field_inequality",
            tally.violations == 0,
            format!("{} violations in {} checks", tally.violations, tally.checked),
        ),
        Gate::new("vk_monotone", vk_monotone, format!("rates {rates:?} for k {:?}", cc.ks)),
    ];
    Ok(RunReport {
        command: cfg.command,
        tables: vec![table, exc],
        summary: s.0,
        gates,
    })
}
