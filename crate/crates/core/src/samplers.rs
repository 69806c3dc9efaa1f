//! Exact and MCMC samplers with deterministic, counter-based seeding.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::models::{GaussianParams, RbmParams};
use crate::par::{self, Execution};
use crate::rng::{self, StreamRng};
use crate::score::ScoreModel;
use crate::special::{log_sum_exp, sigmoid};

/// Burn-in, thinning, step parameters and seed for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub thinning: usize,
    /// MALA proposal scale ε, or HMC leapfrog step.
    pub step_size: f64,
    /// HMC path length L (ignored elsewhere).
    pub leapfrog_steps: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn mala(step_size: f64, seed: u64) -> Self {
        Self {
            burn_in: 5000,
            thinning: 1,
            step_size,
            leapfrog_steps: 1,
            seed,
        }
    }

    pub fn hmc(step_size: f64, leapfrog_steps: usize, seed: u64) -> Self {
        Self {
            burn_in: 5000,
            thinning: 1,
            step_size,
            leapfrog_steps,
            seed,
        }
    }

    /// Gibbs: 1000 burn-in sweeps, thinning 1.
    pub fn gibbs(seed: u64) -> Self {
        Self {
            burn_in: 1000,
            thinning: 1,
            step_size: 1.0,
            leapfrog_steps: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::Input("chain thinning must be ≥ 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Input(format!("step size must be > 0, got {}", self.step_size)));
        }
        if self.leapfrog_steps == 0 {
            return Err(Error::Input("leapfrog steps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Retained samples of one chain plus its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<Vec<f64>>,
    /// Mean Metropolis acceptance over all iterations (burn-in included), in [0, 1].
    pub acceptance_rate: f64,
    /// HMC trajectories with |ΔH| > 1e3.
    pub divergences: usize,
}

const DIVERGENCE_THRESHOLD: f64 = 1e3;

fn std_normal_vec(rng: &mut StreamRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// I.i.d. draws from N(μ, Σ) via the Cholesky factor.
pub fn sample_gaussian_exact(params: &GaussianParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::substream(seed, &[]);
    let d = params.dim();
    let l = params.chol_lower();
    let mu = params.mean();
    (0..n)
        .map(|_| {
            let z = DVector::from_vec(std_normal_vec(&mut rng, d));
            (mu + l * z).as_slice().to_vec()
        })
        .collect()
}

fn log_target<M: ScoreModel + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    let v = model
        .unnorm_log_density(x)
        .or_else(|| model.log_density(x))
        .ok_or_else(|| Error::Capability("MCMC needs an (unnormalized) log-density".into()))?;
    if v.is_nan() {
        return Err(Error::Numeric(format!("log-density is NaN at state {x:?}")));
    }
    Ok(v)
}

fn checked_grad<M: ScoreModel + ?Sized>(model: &M, x: &[f64]) -> Result<Vec<f64>> {
    let g = model.grad_log_density(x);
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "gradient component {i} is not finite at state {x:?}"
        )));
    }
    Ok(g)
}

fn total_iterations(cfg: &ChainConfig, n: usize) -> usize {
    cfg.burn_in + n * cfg.thinning
}

fn keep(cfg: &ChainConfig, iter: usize) -> bool {
    iter >= cfg.burn_in && (iter - cfg.burn_in + 1).is_multiple_of(cfg.thinning)
}

/// Metropolis-adjusted Langevin chain targeting the model density.
///
/// Proposal x' = x + (ε²/2)∇log p(x) + εξ with the asymmetric Gaussian
/// proposal density in the acceptance ratio.
pub fn mala_chain<M: ScoreModel + ?Sized>(
    model: &M,
    init: &[f64],
    cfg: &ChainConfig,
    n: usize,
) -> Result<ChainOutput> {
    cfg.validate()?;
    ensure_dim(model.dim(), init.len(), "mala_chain init")?;
    let mut rng = rng::substream(cfg.seed, &[]);
    let eps = cfg.step_size;
    let half_eps2 = 0.5 * eps * eps;
    let d = init.len();

    // log q(to | from) up to a constant shared by both directions
    let log_proposal = |to: &[f64], from: &[f64], grad_from: &[f64]| -> f64 {
        let ss: f64 = (0..d)
            .map(|i| {
                let r = to[i] - from[i] - half_eps2 * grad_from[i];
                r * r
            })
            .sum();
        -ss / (4.0 * half_eps2)
    };

    let mut x = init.to_vec();
    let mut lp = log_target(model, &x)?;
    let mut grad = checked_grad(model, &x)?;
    let mut accepted = 0usize;
    let total = total_iterations(cfg, n);
    let mut samples = Vec::with_capacity(n);

    for iter in 0..total {
        let xi = std_normal_vec(&mut rng, d);
        let prop: Vec<f64> = (0..d).map(|i| x[i] + half_eps2 * grad[i] + eps * xi[i]).collect();
        let lp_prop = log_target(model, &prop)?;
        let grad_prop = checked_grad(model, &prop)?;
        let log_ratio = lp_prop - lp + log_proposal(&x, &prop, &grad_prop) - log_proposal(&prop, &x, &grad);
        let u: f64 = rng.random();
        if log_ratio.is_finite() && u.ln() < log_ratio {
            x = prop;
            lp = lp_prop;
            grad = grad_prop;
            accepted += 1;
        }
        if keep(cfg, iter) {
            samples.push(x.clone());
        }
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: accepted as f64 / total.max(1) as f64,
        divergences: 0,
    })
}

/// L leapfrog steps of size ε with unit mass. Returns the final (position, momentum).
pub fn leapfrog<M: ScoreModel + ?Sized>(
    model: &M,
    x: &[f64],
    p: &[f64],
    eps: f64,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = x.to_vec();
    let mut p = p.to_vec();
    let mut g = checked_grad(model, &x)?;
    for _ in 0..steps {
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += 0.5 * eps * gi;
        }
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += eps * pi;
        }
        g = checked_grad(model, &x)?;
        for (pi, gi) in p.iter_mut().zip(&g) {
            *pi += 0.5 * eps * gi;
        }
    }
    Ok((x, p))
}

fn kinetic(p: &[f64]) -> f64 {
    0.5 * p.iter().map(|v| v * v).sum::<f64>()
}

/// Hamiltonian Monte Carlo with leapfrog integration and unit mass.
pub fn hmc_chain<M: ScoreModel + ?Sized>(
    model: &M,
    init: &[f64],
    cfg: &ChainConfig,
    n: usize,
) -> Result<ChainOutput> {
    cfg.validate()?;
    ensure_dim(model.dim(), init.len(), "hmc_chain init")?;
    let mut rng = rng::substream(cfg.seed, &[]);
    let d = init.len();
    let mut x = init.to_vec();
    let mut lp = log_target(model, &x)?;
    let mut accepted = 0usize;
    let mut divergences = 0usize;
    let total = total_iterations(cfg, n);
    let mut samples = Vec::with_capacity(n);

    for iter in 0..total {
        let p0 = std_normal_vec(&mut rng, d);
        let (x1, p1) = leapfrog(model, &x, &p0, cfg.step_size, cfg.leapfrog_steps)?;
        let lp1 = log_target(model, &x1)?;
        let delta_h = (-lp1 + kinetic(&p1)) - (-lp + kinetic(&p0));
        let u: f64 = rng.random();
        if !delta_h.is_finite() || delta_h.abs() > DIVERGENCE_THRESHOLD {
            divergences += 1;
        } else if u.ln() < -delta_h {
            x = x1;
            lp = lp1;
            accepted += 1;
        }
        if keep(cfg, iter) {
            samples.push(x.clone());
        }
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: accepted as f64 / total.max(1) as f64,
        divergences,
    })
}

/// Block Gibbs sampling of the RBM: h | x ~ Bernoulli(σ(Wᵀx + c)), x | h ~ N(b + Wh, I).
/// `burn_in` and `thinning` count full sweeps. Returns visible samples.
pub fn rbm_gibbs_chain(
    params: &RbmParams,
    init: &[f64],
    cfg: &ChainConfig,
    n: usize,
) -> Result<ChainOutput> {
    if cfg.thinning == 0 {
        return Err(Error::Input("chain thinning must be ≥ 1".into()));
    }
    params.validate()?;
    ensure_dim(params.d_x(), init.len(), "rbm_gibbs_chain init")?;
    let mut rng = rng::substream(cfg.seed, &[]);
    let (d_x, d_h) = (params.d_x(), params.d_h());
    let mut x = DVector::from_column_slice(init);
    let mut h = DVector::<f64>::zeros(d_h);
    let total = total_iterations(cfg, n);
    let mut samples = Vec::with_capacity(n);
    for iter in 0..total {
        let a = params.w.tr_mul(&x) + &params.c;
        for j in 0..d_h {
            let u: f64 = rng.random();
            h[j] = if u < sigmoid(a[j]) { 1.0 } else { 0.0 };
        }
        let mean = &params.b + &params.w * &h;
        for i in 0..d_x {
            let z: f64 = rng.sample(StandardNormal);
            x[i] = mean[i] + z;
        }
        if keep(cfg, iter) {
            samples.push(x.as_slice().to_vec());
        }
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: 1.0,
        divergences: 0,
    })
}

const MAX_ENUMERATED_HIDDEN: usize = 12;

/// Exact mean and covariance of the RBM visible marginal, a mixture of
/// N(b + Wh, I) over h ∈ {0,1}^{d_h} with weights ∝ exp(cᵀh + ½‖b+Wh‖² − ½‖b‖²).
pub fn rbm_exact_mixture_moments(params: &RbmParams) -> Result<(DVector<f64>, DMatrix<f64>)> {
    params.validate()?;
    let (d_x, d_h) = (params.d_x(), params.d_h());
    if d_h > MAX_ENUMERATED_HIDDEN {
        return Err(Error::Capability(format!(
            "exact mixture enumeration supports d_h ≤ {MAX_ENUMERATED_HIDDEN}, got {d_h}"
        )));
    }
    let b_sq = params.b.norm_squared();
    let components: Vec<(f64, DVector<f64>)> = (0..1usize << d_h)
        .map(|mask| {
            let h = DVector::from_fn(d_h, |j, _| ((mask >> j) & 1) as f64);
            let m = &params.b + &params.w * &h;
            let log_w = params.c.dot(&h) + 0.5 * m.norm_squared() - 0.5 * b_sq;
            (log_w, m)
        })
        .collect();
    let log_norm = log_sum_exp(components.iter().map(|(lw, _)| *lw));
    let mut mean = DVector::zeros(d_x);
    let mut second = DMatrix::identity(d_x, d_x);
    for (lw, m) in &components {
        let w = (lw - log_norm).exp();
        mean += w * m;
        second += w * m * m.transpose();
    }
    let cov = second - &mean * mean.transpose();
    Ok((mean, cov))
}

/// Which MCMC kernel a step-size tuner targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Mala,
    Hmc,
}

impl Kernel {
    /// Acceptance rate the tuner aims for.
    pub fn target_acceptance(self) -> f64 {
        match self {
            Kernel::Mala => 0.57,
            Kernel::Hmc => 0.8,
        }
    }
}

/// Adjust the step size in a pre-run so the acceptance rate approaches the
/// kernel's target. Returns the tuned step size and the state the pre-run ended in.
pub fn tune_step_size<M: ScoreModel + ?Sized>(
    model: &M,
    kernel: Kernel,
    init: &[f64],
    base: &ChainConfig,
    rounds: usize,
    steps_per_round: usize,
) -> Result<(f64, Vec<f64>)> {
    let target = kernel.target_acceptance();
    let mut eps = base.step_size;
    let mut state = init.to_vec();
    for round in 0..rounds {
        let cfg = ChainConfig {
            burn_in: 0,
            thinning: 1,
            step_size: eps,
            seed: rng::derive_seed(base.seed, &[rng::name_key("tune"), round as u64]),
            ..*base
        };
        let out = match kernel {
            Kernel::Mala => mala_chain(model, &state, &cfg, steps_per_round)?,
            Kernel::Hmc => hmc_chain(model, &state, &cfg, steps_per_round)?,
        };
        if let Some(last) = out.samples.last() {
            state = last.clone();
        }
        let gain = 2.0 / ((round + 1) as f64).sqrt();
        eps *= (gain * (out.acceptance_rate - target)).exp();
    }
    Ok((eps, state))
}

/// Run `n_chains` independent chains and concatenate their samples in chain order.
///
/// Chain `k` draws from substream `(cfg.seed, k)`, so the output does not
/// depend on how many threads execute it.
pub fn run_chains<F>(
    exec: Execution,
    cfg: &ChainConfig,
    n_chains: usize,
    n_total: usize,
    chain: F,
) -> Result<ChainOutput>
where
    F: Fn(&ChainConfig, usize) -> Result<ChainOutput> + Sync + Send,
{
    if n_chains == 0 {
        return Err(Error::Input("need at least one chain".into()));
    }
    let outs = par::map_indexed(exec, n_chains, |k| {
        let per = n_total / n_chains + usize::from(k < n_total % n_chains);
        let sub = ChainConfig {
            seed: rng::derive_seed(cfg.seed, &[k as u64]),
            ..*cfg
        };
        chain(&sub, per)
    });
    let mut samples = Vec::with_capacity(n_total);
    let mut acc = 0.0;
    let mut divergences = 0;
    for out in outs {
        let out = out?;
        acc += out.acceptance_rate;
        divergences += out.divergences;
        samples.extend(out.samples);
    }
    Ok(ChainOutput {
        samples,
        acceptance_rate: acc / n_chains as f64,
        divergences,
    })
}
