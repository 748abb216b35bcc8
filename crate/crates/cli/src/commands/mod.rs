//! One module per subcommand. Each validates its whole configuration before
//! simulating anything.

mod couple;
mod girsanov;
mod lemma;
mod signed;
mod spde;
mod sticky;

use rayon::prelude::*;

use spdelab::heat::GridSpec;
use spdelab::stats::MCResult;

use crate::config::{Command, ExperimentConfig};
use crate::table::num;
use crate::{invalid, CliError, RunReport};

pub fn dispatch(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    match cfg.command {
        Command::SimulateSpde => spde::run(cfg),
        Command::Couple => couple::run(cfg),
        Command::SignedExcursions => signed::run(cfg),
        Command::SdeSticky => sticky::run(cfg),
        Command::GirsanovSurvival => girsanov::run(cfg),
        Command::LemmaCheck => lemma::run(cfg),
    }
}

/// `f(0), …, f(n − 1)` on the current pool, in index order.
pub(crate) fn par_map<T: Send>(
    n: u64,
    f: impl Fn(u64) -> Result<T, spdelab::Error> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    Ok((0..n).into_par_iter().map(f).collect::<Result<Vec<_>, _>>()?)
}

pub(crate) fn grid(cfg: &ExperimentConfig) -> Result<GridSpec, CliError> {
    let mut g = GridSpec::new(cfg.f64("half_width")?, cfg.get("n_cells")?, cfg.f64("ratio")?).map_err(invalid)?;
    if cfg.has("zero_mass_factor") {
        g.zero_mass_factor = cfg.f64("zero_mass_factor")?;
        g.validate().map_err(invalid)?;
    }
    Ok(g)
}

/// Summary rows under construction.
#[derive(Default)]
pub(crate) struct Summary(pub Vec<(String, String)>);

impl Summary {
    pub fn add(&mut self, k: impl Into<String>, v: impl ToString) {
        self.0.push((k.into(), v.to_string()));
    }

    pub fn num(&mut self, k: impl Into<String>, v: f64) {
        self.0.push((k.into(), num(v)));
    }

    pub fn mc(&mut self, prefix: &str, r: &MCResult) {
        self.num(format!("{prefix}_mean"), r.mean);
        self.num(format!("{prefix}_stderr"), r.stderr);
        self.num(format!("{prefix}_ci_lo"), r.ci95.0);
        self.num(format!("{prefix}_ci_hi"), r.ci95.1);
    }
}
