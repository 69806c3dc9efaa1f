//! Sample pools for each hypothesis, drawn from a model or read from CSV.

use std::path::Path;

use scoretest::models::Model;
use scoretest::samplers::{
    hmc_chain, mala_chain, rbm_gibbs_chain, run_chains, sample_gaussian_exact, tune_step_size, ChainConfig, Kernel,
};
use scoretest::{rng, Error, Execution, ScoreModel};

use crate::config::{SamplerConfig, SamplerKind};
use crate::CliError;

const TUNE_ROUNDS: usize = 20;
const TUNE_STEPS: usize = 200;

fn resolve_kind(model: &Model, kind: SamplerKind) -> SamplerKind {
    match (kind, model) {
        (SamplerKind::Auto, Model::Gaussian(_)) => SamplerKind::Exact,
        (SamplerKind::Auto, Model::Rbm(_)) => SamplerKind::Gibbs,
        (SamplerKind::Auto, Model::Quartic(_)) => SamplerKind::Mala,
        (k, _) => k,
    }
}

/// Draw `n` points from `model`.
pub fn draw_pool(model: &Model, sampler: &SamplerConfig, n: usize, seed: u64, exec: Execution) -> Result<Vec<Vec<f64>>, CliError> {
    let init = model.mode_proxy();
    let kind = resolve_kind(model, sampler.kind);
    let chain_cfg = |step: f64, burn_default: usize| ChainConfig {
        burn_in: sampler.burn_in.unwrap_or(burn_default),
        thinning: sampler.thinning,
        step_size: step,
        leapfrog_steps: sampler.leapfrog_steps,
        seed,
    };
    let out = match (kind, model) {
        (SamplerKind::Exact, Model::Gaussian(g)) => return Ok(sample_gaussian_exact(g.params(), n, seed)),
        (SamplerKind::Gibbs, Model::Rbm(r)) => {
            let cfg = chain_cfg(1.0, 1000);
            run_chains(exec, &cfg, sampler.chains, n, |c, k| rbm_gibbs_chain(r.params(), &init, c, k))?
        }
        (SamplerKind::Mala | SamplerKind::Hmc, _) => {
            let kernel = if kind == SamplerKind::Mala { Kernel::Mala } else { Kernel::Hmc };
            let d = model.dim() as f64;
            let step = match sampler.step_size {
                Some(s) => s,
                None => {
                    let guess = if kernel == Kernel::Mala { d.powf(-1.0 / 6.0) } else { 0.5 * d.powf(-0.25) / sampler.leapfrog_steps as f64 };
                    let base = ChainConfig {
                        seed: rng::derive_seed(seed, &[rng::name_key("tune")]),
                        ..chain_cfg(guess, 0)
                    };
                    let (eps, _) = tune_step_size(model, kernel, &init, &base, TUNE_ROUNDS, TUNE_STEPS)?;
                    log::info!("tuned {kernel:?} step size to {eps:.4}");
                    eps
                }
            };
            let cfg = chain_cfg(step, 5000);
            run_chains(exec, &cfg, sampler.chains, n, |c, k| match kernel {
                Kernel::Mala => mala_chain(model, &init, c, k),
                Kernel::Hmc => hmc_chain(model, &init, c, k),
            })?
        }
        (k, m) => {
            return Err(Error::Capability(format!("sampler {k:?} is not available for {} models", m.family())).into());
        }
    };
    log::info!(
        "{} pool: {} points, acceptance {:.3}, divergences {}",
        model.family(),
        out.samples.len(),
        out.acceptance_rate,
        out.divergences
    );
    Ok(out.samples)
}

pub fn read_pool(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let pts = scoretest::io::read_points_csv(path)?;
    if pts.is_empty() {
        return Err(CliError::Usage(format!("{} has no points", path.display())));
    }
    if pts[0].len() != dim {
        return Err(CliError::Usage(format!(
            "{} has dimension {}, models have dimension {dim}",
            path.display(),
            pts[0].len()
        )));
    }
    Ok(pts)
}
