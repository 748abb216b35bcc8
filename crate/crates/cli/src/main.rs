use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use spdelab_cli::{run, write_outputs, CliError, Command, ExperimentConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    SimulateSpde,
    Couple,
    SignedExcursions,
    SdeSticky,
    GirsanovSurvival,
    LemmaCheck,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::SimulateSpde => Command::SimulateSpde,
            Sub::Couple => Command::Couple,
            Sub::SignedExcursions => Command::SignedExcursions,
            Sub::SdeSticky => Command::SdeSticky,
            Sub::GirsanovSurvival => Command::GirsanovSurvival,
            Sub::LemmaCheck => Command::LemmaCheck,
        }
    }
}

/// Reproducible experiments for the stochastic heat equation with X^p noise,
/// its excursion coupling and the sticky diffusion dX = b dt + X^p dB.
///
/// Exit status: 0 when every gate passes, 2 on a configuration error,
/// 3 when a gate fails, 1 on other errors.
#[derive(Debug, Parser)]
#[command(name = "spdelab", version = spdelab_cli::BUILD_ID)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// key = value file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, visible_alias = "seeds")]
    replicates: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; the output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Extra key=value overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn configure(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(args.command.into());
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = args.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(r) = args.replicates {
        cfg.set("replicates", &r.to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = configure(&args).and_then(|cfg| {
        let report = run(&cfg, workers)?;
        write_outputs(&cfg, &report, &args.out)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            for (k, v) in &report.summary {
                println!("{k},{v}");
            }
            for g in &report.gates {
                println!("{} {}: {}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
