//! `lemma-check`: the Hölder-class integral inequality on generated functions.
//!
//! Function `i` has class `(beta, C)` and support half-width `W`, with `C`
//! and `W` log-uniform in `[c_min, c_max]` and `[w_min, w_max]`.
//!
//! `checks.csv`: replicate, c, w, alpha, lhs, rhs, ratio, holds,
//! scaled_holds (empty for the zero function).

use spdelab::holder::{generate_holder_fn, ral_check, HolderClass};
use spdelab::noise::{streams, SeedSpec};

use super::{par_map, Summary};
use crate::config::ExperimentConfig;
use crate::table::{flag, num, Table};
use crate::{invalid, CliError, Gate, RunReport};

struct Check {
    alpha: f64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    holds: bool,
    strict: bool,
    scaled: Option<bool>,
}

pub(crate) fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let seed = cfg.seed()?;
    let n = cfg.replicates()?;
    let beta = cfg.f64("beta")?;
    let alphas = cfg.list("alphas")?;
    let (c_lo, c_hi) = (cfg.f64("c_min")?, cfg.f64("c_max")?);
    let (w_lo, w_hi) = (cfg.f64("w_min")?, cfg.f64("w_max")?);
    HolderClass::new(beta, c_lo).map_err(invalid)?;
    if !(c_lo > 0.0 && c_lo <= c_hi && w_lo > 0.0 && w_lo <= w_hi) {
        return Err(CliError::Config("need 0 < c_min ≤ c_max and 0 < w_min ≤ w_max".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(CliError::Config(format!("alpha {a} outside (0, 1)")));
    }
    let log_uniform = |lo: f64, hi: f64, u: f64| lo * (hi / lo).powf(u);

    let results = par_map(n, |i| {
        let mut u = SeedSpec::new(seed, i, streams::CLASS).normals();
        let c = log_uniform(c_lo, c_hi, u.uniform());
        let w = log_uniform(w_lo, w_hi, u.uniform());
        let f = generate_holder_fn(SeedSpec::new(seed, i, 0), HolderClass::new(beta, c)?, w)?;
        let g = f.scale_reduce()?;
        let checks = alphas
            .iter()
            .map(|&alpha| {
                let r = ral_check(&f, alpha)?;
                let scaled = match &g {
                    Some(g) => Some(ral_check(g, alpha)?.holds),
                    None => None,
                };
                Ok(Check {
                    alpha,
                    lhs: r.lhs,
                    rhs: r.rhs,
                    ratio: r.ratio(),
                    holds: r.holds,
                    strict: r.strict,
                    scaled,
                })
            })
            .collect::<spdelab::Result<Vec<_>>>()?;
        Ok((c, w, checks))
    })?;

    let mut t = Table::new(
        "checks",
        &["replicate", "c", "w", "alpha", "lhs", "rhs", "ratio", "holds", "scaled_holds"],
    );
    let (mut checks, mut violations, mut strict_violations, mut disagreements) = (0u64, 0u64, 0u64, 0u64);
    let mut min_ratio = f64::INFINITY;
    for (i, (c, w, rows)) in results.iter().enumerate() {
        for r in rows {
            checks += 1;
            violations += u64::from(!r.holds);
            strict_violations += u64::from(!r.strict);
            disagreements += u64::from(r.scaled.is_some_and(|s| s != r.holds));
            min_ratio = min_ratio.min(r.ratio);
            t.push(vec![
                i.to_string(),
                num(*c),
                num(*w),
                num(r.alpha),
                num(r.lhs),
                num(r.rhs),
                num(r.ratio),
                flag(r.holds),
                r.scaled.map_or(String::new(), flag),
            ]);
        }
    }
    let mut s = Summary::default();
    s.add("functions", n);
    s.add("checks", checks);
    s.add("violations", violations);
    s.add("strict_violations", strict_violations);
    s.add("scale_disagreements", disagreements);
    s.num("min_ratio", min_ratio);
    let gates = vec![
        Gate::new("inequality", violations == 0, format!("{violations} of {checks} checks fail")),
        Gate::new(
            "scale_invariance",
            disagreements == 0,
            format!("{disagreements} outcomes change under rescaling"),
        ),
    ];
    Ok(RunReport {
        command: cfg.command,
        tables: vec![t],
        summary: s.0,
        gates,
    })
}
