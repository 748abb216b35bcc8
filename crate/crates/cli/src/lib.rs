//! Experiment runner for `spdelab`.
//!
//! A run takes an [`ExperimentConfig`], dispatches replicates over a rayon
//! pool and produces CSV tables. Replicate `i` always uses
//! `SeedSpec::new(seed, i, ·)` and results are collected in index order, so
//! the output does not depend on the number of workers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{Command, ExperimentConfig};
pub use table::Table;

use spdelab::holder::ral_constant;
use spdelab::sde1d::smallness_chain;

pub const BUILD_ID: &str = env!("SPDELAB_BUILD_ID");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(#[from] spdelab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Core errors raised while validating parameters count as config errors.
pub(crate) fn invalid(e: spdelab::Error) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: Command,
    pub tables: Vec<Table>,
    pub summary: Vec<(String, String)>,
    pub gates: Vec<Gate>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.value(key).and_then(|v| v.parse().ok())
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new("summary", &["key", "value"]);
        for (k, v) in &self.summary {
            t.push(vec![k.clone(), v.clone()]);
        }
        for g in &self.gates {
            t.push(vec![format!("gate_{}", g.name), if g.pass { "pass" } else { "fail" }.into()]);
        }
        t
    }
}

/// Runs `cfg` on a pool of `workers` threads.
pub fn run(cfg: &ExperimentConfig, workers: usize) -> Result<RunReport, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| commands::dispatch(cfg))
}

/// Build id, config echo and derived constants of the run.
pub fn manifest(cfg: &ExperimentConfig) -> Table {
    let mut t = Table::new("manifest", &["key", "value"]);
    t.push(vec!["build_id".into(), BUILD_ID.into()]);
    t.push(vec!["command".into(), cfg.command.name().into()]);
    for (k, v) in cfg.entries() {
        t.push(vec![format!("config.{k}"), v.into()]);
    }
    let p = cfg.f64("p").ok();
    let k = cfg.f64("k").ok();
    let b = if cfg.has("b") { cfg.f64("b").ok() } else { Some(1.0) };
    let derived = |name: &str, v: Option<f64>| vec![name.to_string(), v.map_or("NA".into(), table::num)];
    t.push(derived("p_prime", p.map(spdelab::derived_exponent)));
    t.push(derived("K_k", k.and_then(|k| ral_constant(0.25, k).ok())));
    let chain = match (b, p, k) {
        (Some(b), Some(p), Some(k)) => smallness_chain(b, p, k).ok(),
        _ => None,
    };
    t.push(derived("s_k_one", chain.map(|c| c.s_k_one)));
    t.push(derived("eps0", chain.map(|c| c.eps0)));
    t.push(derived("x0_bound", chain.map(|c| c.x0_bound)));
    t
}

/// Writes every table of `report`, `summary.csv` and `manifest.csv` under
/// `out`, returning the paths written.
pub fn write_outputs(cfg: &ExperimentConfig, report: &RunReport, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for t in report.tables.iter().chain([&report.summary_table(), &manifest(cfg)]) {
        let path = out.join(format!("{}.csv", t.name));
        std::fs::write(&path, t.to_csv()?)?;
        written.push(path);
    }
    Ok(written)
}
