//! Alternative-hypothesis construction by small parameter perturbations.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{GaussianParams, Model, ModelSpec, QuarticExpFamilyParams, RbmParams};
use crate::rng::StreamRng;

/// Default perturbation scale σ_ptb.
pub const DEFAULT_SIGMA_PTB: f64 = 0.01;

/// Which parameter receives the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbTarget {
    /// Gaussian mean: μ + N(0, σ²) per coordinate.
    Mean,
    /// Gaussian covariance: Σ_ii + exp(N(0, σ²)) per diagonal entry.
    Cov,
    /// RBM weights: W + N(0, σ²) per entry.
    Weights,
    /// Quartic τ: τ + σ (deterministic shift).
    Tau,
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Input(format!("perturbation scale {sigma}: {e}")))
}

pub fn perturb_gaussian_mean(p: &GaussianParams, sigma: f64, rng: &mut StreamRng) -> Result<GaussianParams> {
    let n = normal(sigma)?;
    let mean = p.mean().map(|m| m + n.sample(rng));
    p.with_mean(mean)
}

/// Adds i.i.d. log-normal noise (log ~ N(0, σ²)) to each diagonal entry of Σ.
pub fn perturb_gaussian_cov_diag(p: &GaussianParams, sigma: f64, rng: &mut StreamRng) -> Result<GaussianParams> {
    let n = normal(sigma)?;
    let mut cov = p.cov().clone();
    for i in 0..cov.nrows() {
        cov[(i, i)] += n.sample(rng).exp();
    }
    GaussianParams::new(p.mean().clone(), cov)
}

pub fn perturb_rbm_weights(p: &RbmParams, sigma: f64, rng: &mut StreamRng) -> Result<RbmParams> {
    let n = normal(sigma)?;
    let mut out = p.clone();
    out.w.iter_mut().for_each(|w| *w += n.sample(rng));
    Ok(out)
}

pub fn perturb_tau(p: &QuarticExpFamilyParams, shift: f64) -> Result<QuarticExpFamilyParams> {
    QuarticExpFamilyParams::new(p.tau + shift, p.d)
}

/// Apply `target` noise of scale `sigma` to a model, returning the new spec.
pub fn perturb_model(model: &Model, target: PerturbTarget, sigma: f64, rng: &mut StreamRng) -> Result<ModelSpec> {
    let mismatch = || Error::Input(format!("cannot perturb {target:?} of a {} model", model.family()));
    Ok(match (model, target) {
        (Model::Gaussian(g), PerturbTarget::Mean) => (&perturb_gaussian_mean(g.params(), sigma, rng)?).into(),
        (Model::Gaussian(g), PerturbTarget::Cov) => (&perturb_gaussian_cov_diag(g.params(), sigma, rng)?).into(),
        (Model::Rbm(r), PerturbTarget::Weights) => (&perturb_rbm_weights(r.params(), sigma, rng)?).into(),
        (Model::Quartic(q), PerturbTarget::Tau) => (&perturb_tau(q.params(), sigma)?).into(),
        _ => return Err(mismatch()),
    })
}

/// Standard-normal weight matrix with zero biases (random null RBM).
pub fn random_rbm(d_x: usize, d_h: usize, rng: &mut StreamRng) -> RbmParams {
    let mut p = RbmParams::zeros(d_x, d_h);
    p.w.iter_mut().for_each(|w| *w = rng.sample(rand_distr::StandardNormal));
    p.b = DVector::zeros(d_x);
    p
}
