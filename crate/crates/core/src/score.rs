//! Hyvärinen score, score differences and Fisher divergence estimates for
//! models known through their log-density derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::par::{self, Execution};

/// A density on R^d known through the gradient and Laplacian of its log.
///
/// Normalized and unnormalized log-densities are optional capabilities; the
/// score itself never needs the normalizing constant.
pub trait ScoreModel: Send + Sync {
    fn dim(&self) -> usize;

    /// ∇ log p(x), length `dim()`.
    fn grad_log_density(&self, x: &[f64]) -> Vec<f64>;

    /// Δ log p(x), the trace of the Hessian of log p.
    fn laplacian_log_density(&self, x: &[f64]) -> f64;

    /// Gradient and Laplacian together; override when they share work.
    fn score_terms(&self, x: &[f64]) -> (Vec<f64>, f64) {
        (self.grad_log_density(x), self.laplacian_log_density(x))
    }

    /// Exact normalized log-density, if available.
    fn log_density(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Log-density up to an additive constant, if available.
    fn unnorm_log_density(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

impl<M: ScoreModel + ?Sized> ScoreModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad_log_density(x)
    }
    fn laplacian_log_density(&self, x: &[f64]) -> f64 {
        (**self).laplacian_log_density(x)
    }
    fn score_terms(&self, x: &[f64]) -> (Vec<f64>, f64) {
        (**self).score_terms(x)
    }
    fn log_density(&self, x: &[f64]) -> Option<f64> {
        (**self).log_density(x)
    }
    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        (**self).unnorm_log_density(x)
    }
}

impl<M: ScoreModel + ?Sized> ScoreModel for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        (**self).grad_log_density(x)
    }
    fn laplacian_log_density(&self, x: &[f64]) -> f64 {
        (**self).laplacian_log_density(x)
    }
    fn score_terms(&self, x: &[f64]) -> (Vec<f64>, f64) {
        (**self).score_terms(x)
    }
    fn log_density(&self, x: &[f64]) -> Option<f64> {
        (**self).log_density(x)
    }
    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        (**self).unnorm_log_density(x)
    }
}

/// Which hypothesis generated a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// Per-point score differences used for log-MGF and exponent estimation.
///
/// Under the null these are `S(X, p∞) − S(X, p1)`; under the alternative the
/// type-II convention `S(X, p1) − S(X, p∞)` is used.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSample {
    values: Vec<f64>,
    source: Hypothesis,
}

impl DifferenceSample {
    pub fn new(values: Vec<f64>, source: Hypothesis) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("difference sample is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "difference sample value {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn source(&self) -> Hypothesis {
        self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// The same values with the opposite orientation (`D ↦ −D`).
    pub fn negated(&self, source: Hypothesis) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            source,
        }
    }
}

fn check_finite_terms(grad: &[f64], lap: f64) -> Result<()> {
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "gradient component {i} is not finite ({})",
            grad[i]
        )));
    }
    if !lap.is_finite() {
        return Err(Error::Numeric(format!("laplacian is not finite ({lap})")));
    }
    Ok(())
}

/// Hyvärinen score ½‖∇log q(x)‖² + Δlog q(x).
pub fn hyvarinen_score_point<M: ScoreModel + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    ensure_dim(model.dim(), x.len(), "hyvarinen_score_point")?;
    let (grad, lap) = model.score_terms(x);
    check_finite_terms(&grad, lap)?;
    Ok(0.5 * grad.iter().map(|g| g * g).sum::<f64>() + lap)
}

/// Mean Hyvärinen score over a sample.
pub fn hyvarinen_score_sample<M: ScoreModel + ?Sized>(model: &M, xs: &[Vec<f64>]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Input("hyvarinen_score_sample: empty sample".into()));
    }
    let mut total = 0.0;
    for x in xs {
        total += hyvarinen_score_point(model, x)?;
    }
    Ok(total / xs.len() as f64)
}

/// `S(x, model0) − S(x, model1)`.
pub fn score_difference<A, B>(model0: &A, model1: &B, x: &[f64]) -> Result<f64>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    ensure_dim(model0.dim(), model1.dim(), "score_difference models")?;
    Ok(hyvarinen_score_point(model0, x)? - hyvarinen_score_point(model1, x)?)
}

/// Score differences `S(x, model0) − S(x, model1)` over all points.
pub fn score_differences<A, B>(
    model0: &A,
    model1: &B,
    xs: &[Vec<f64>],
    exec: Execution,
) -> Result<Vec<f64>>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    par::map_slice(exec, xs, |x| score_difference(model0, model1, x))
        .into_iter()
        .collect()
}

/// Build the difference sample for `source` from points drawn under it.
///
/// For [`Hypothesis::Null`] the values are `S(X,p∞) − S(X,p1)`, for
/// [`Hypothesis::Alternative`] they are `S(X,p1) − S(X,p∞)`.
pub fn difference_sample<A, B>(
    null_model: &A,
    alt_model: &B,
    xs: &[Vec<f64>],
    source: Hypothesis,
    exec: Execution,
) -> Result<DifferenceSample>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    let values = match source {
        Hypothesis::Null => score_differences(null_model, alt_model, xs, exec)?,
        Hypothesis::Alternative => score_differences(alt_model, null_model, xs, exec)?,
    };
    DifferenceSample::new(values, source)
}

fn half_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
}

/// Monte Carlo Fisher divergence D_F(p‖q) from samples of p.
pub fn fisher_divergence_mc<P, Q>(model_p: &P, model_q: &Q, samples_from_p: &[Vec<f64>]) -> Result<f64>
where
    P: ScoreModel + ?Sized,
    Q: ScoreModel + ?Sized,
{
    Ok(fisher_divergence_terms(model_p, model_q, samples_from_p)?
        .iter()
        .sum::<f64>()
        / samples_from_p.len() as f64)
}

/// Per-point terms ½‖∇log p(x) − ∇log q(x)‖² (useful for standard errors).
pub fn fisher_divergence_terms<P, Q>(model_p: &P, model_q: &Q, xs: &[Vec<f64>]) -> Result<Vec<f64>>
where
    P: ScoreModel + ?Sized,
    Q: ScoreModel + ?Sized,
{
    if xs.is_empty() {
        return Err(Error::Input("fisher_divergence_mc: empty sample".into()));
    }
    ensure_dim(model_p.dim(), model_q.dim(), "fisher_divergence_mc models")?;
    xs.iter()
        .map(|x| {
            ensure_dim(model_p.dim(), x.len(), "fisher_divergence_mc point")?;
            let gp = model_p.grad_log_density(x);
            let gq = model_q.grad_log_density(x);
            check_finite_terms(&gp, 0.0)?;
            check_finite_terms(&gq, 0.0)?;
            Ok(half_sq_dist(&gp, &gq))
        })
        .collect()
}

/// Per-point terms of the expanded form ½‖∇log p(x)‖² + S_H(x, q).
pub fn fisher_expansion_terms<P, Q>(model_p: &P, model_q: &Q, xs: &[Vec<f64>]) -> Result<Vec<f64>>
where
    P: ScoreModel + ?Sized,
    Q: ScoreModel + ?Sized,
{
    if xs.is_empty() {
        return Err(Error::Input("fisher_expansion_terms: empty sample".into()));
    }
    xs.iter()
        .map(|x| {
            let gp = model_p.grad_log_density(x);
            Ok(0.5 * gp.iter().map(|g| g * g).sum::<f64>() + hyvarinen_score_point(model_q, x)?)
        })
        .collect()
}

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Finite-difference comparison of a model's analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    /// max_i |g_i − ĝ_i| / max(|g_i|, 1)
    pub grad_rel_error: f64,
    /// |Δ − Δ̂| / max(|Δ|, 1)
    pub laplacian_rel_error: f64,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.grad_rel_error.max(self.laplacian_rel_error)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_error() <= tol
    }
}

fn rel_err(analytic: f64, approx: f64) -> f64 {
    (analytic - approx).abs() / analytic.abs().max(1.0)
}

/// Compare the analytic gradient and Laplacian against central differences
/// of the unnormalized log-density.
pub fn check_model_derivatives<M: ScoreModel + ?Sized>(
    model: &M,
    x: &[f64],
    h: f64,
) -> Result<DerivativeReport> {
    ensure_dim(model.dim(), x.len(), "check_model_derivatives")?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("finite-difference step must be > 0, got {h}")));
    }
    let f = |p: &[f64]| -> Result<f64> {
        model
            .unnorm_log_density(p)
            .or_else(|| model.log_density(p))
            .ok_or_else(|| Error::Capability("model exposes no log-density for finite differences".into()))
    };
    let f0 = f(x)?;
    let (grad, lap) = model.score_terms(x);
    check_finite_terms(&grad, lap)?;

    let mut probe = x.to_vec();
    let mut grad_err: f64 = 0.0;
    let mut lap_fd = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe)?;
        probe[i] = x[i] - h;
        let fm = f(&probe)?;
        probe[i] = x[i];
        grad_err = grad_err.max(rel_err(grad[i], (fp - fm) / (2.0 * h)));
        lap_fd += (fp - 2.0 * f0 + fm) / (h * h);
    }
    Ok(DerivativeReport {
        grad_rel_error: grad_err,
        laplacian_rel_error: rel_err(lap, lap_fd),
    })
}
