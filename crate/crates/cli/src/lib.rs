//! Command-line driver: experiment configuration, sample pools and the
//! `check`, `exponent`, `sweep`, `train-rbm`, `ingest` and `perturb` commands.

pub mod args;
pub mod commands;
pub mod config;
pub mod pools;

use args::{Cli, Command};
use config::ExperimentConfig;
use scoretest::Execution;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] scoretest::Error),
    #[error("invalid usage: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 1 validation, 2 numeric, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        use scoretest::Error as E;
        match self {
            CliError::Usage(_) | CliError::Json(_) => 1,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                E::Input(_) | E::Capability(_) | E::Json(_) => 1,
                E::Numeric(_) | E::Training { .. } => 2,
                E::Io(_) => 3,
                E::Csv(c) if c.is_io_error() => 3,
                E::Csv(_) => 1,
            },
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let exec = if g.sequential { Execution::Sequential } else { Execution::Parallel };
    let seed_only = || g.seed.unwrap_or(0);
    match &cli.command {
        Command::Check(a) => {
            let cfg = ExperimentConfig::resolve(g)?;
            let r = commands::cmd_check(&cfg, a, &g.out)?;
            for m in &r.models {
                println!(
                    "{} ({}): grad {:.2e}, laplacian {:.2e} -> {}",
                    m.role,
                    m.family,
                    m.max_grad_rel_error,
                    m.max_laplacian_rel_error,
                    if m.passed { "ok" } else { "FAILED" }
                );
            }
        }
        Command::Exponent(a) => {
            let cfg = ExperimentConfig::resolve(g)?;
            let r = commands::cmd_exponent(&cfg, a.m, &g.out, exec)?;
            println!(
                "T = {:.6}: type-I exponent {:.6}, type-II exponent {:.6}",
                r.threshold.threshold, r.type1.exponent, r.type2.exponent
            );
            if let Some(c) = r.gaussian_closed_form {
                println!("closed form: type-I {:.6}, type-II {:.6}", c.type1, c.type2);
            }
        }
        Command::Sweep => {
            let cfg = ExperimentConfig::resolve(g)?;
            let r = commands::cmd_sweep(&cfg, &g.out, exec)?;
            println!("wrote {}", g.out.join(&r.csv).display());
        }
        Command::TrainRbm(a) => {
            let cfg = ExperimentConfig::resolve(g)?;
            let r = commands::cmd_train_rbm(&cfg, a, &g.out, exec)?;
            println!(
                "objective {:.6} -> {:.6}; wrote {}",
                r.initial_objective,
                r.final_objective,
                g.out.join(&r.model).display()
            );
        }
        Command::Ingest(a) => {
            let seed = match &g.config {
                Some(_) => ExperimentConfig::resolve(g)?.seed,
                None => seed_only(),
            };
            let r = commands::cmd_ingest(seed, a, &g.out)?;
            for (name, (_, n)) in &r.splits {
                println!("{name}: {n}");
            }
        }
        Command::Perturb(a) => {
            let seed = match &g.config {
                Some(_) => ExperimentConfig::resolve(g)?.seed,
                None => seed_only(),
            };
            let r = commands::cmd_perturb(seed, a, &g.out)?;
            println!("wrote {}", g.out.join(&r.model).display());
        }
    }
    Ok(())
}
