//! Log-MGF estimation, the Legendre transform, closed-form Gaussian exponents
//! and the interval of thresholds with two positive exponents.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::models::GaussianParams;
use crate::par::{self, Execution};
use crate::score::{DifferenceSample, Hypothesis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Type1,
    Type2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDiagnostics {
    pub iterations: usize,
    /// Final search bracket in θ.
    pub bracket: (f64, f64),
    /// Number of objective evaluations.
    pub evaluations: usize,
}

/// φ*(T) together with its maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub error_kind: ErrorKind,
    pub threshold: f64,
    pub theta_star: f64,
    /// max(sup_θ g(θ), 0); a lower bound when `unbounded` is set.
    pub exponent: f64,
    /// The objective was still increasing at the largest θ searched.
    pub unbounded: bool,
    pub diagnostics: OptimizerDiagnostics,
}

/// Serialized exponent report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub error_kind: ErrorKind,
    #[serde(rename = "T")]
    pub threshold: f64,
    pub theta_star: f64,
    pub exponent: f64,
    pub unbounded: bool,
    pub m: usize,
}

impl ExponentResult {
    pub fn report(&self, m: usize) -> ExponentReport {
        ExponentReport {
            error_kind: self.error_kind,
            threshold: self.threshold,
            theta_star: self.theta_star,
            exponent: self.exponent,
            unbounded: self.unbounded,
            m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreOptions {
    /// Initial upper end of the θ bracket.
    pub theta_max: f64,
    /// Tolerance on θ.
    pub tol: f64,
    /// How many times the bracket may double before the result is flagged unbounded.
    pub max_expansions: usize,
    pub exec: Execution,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        Self {
            theta_max: 50.0,
            tol: 1e-8,
            max_expansions: 8,
            exec: Execution::default(),
        }
    }
}

/// log[(1/m) Σ exp(θ D_k)], max-shifted; exactly 0 at θ = 0.
pub fn log_mgf_values(values: &[f64], theta: f64, exec: Execution) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Input("log-MGF of an empty sample".into()));
    }
    if !theta.is_finite() {
        return Err(Error::Input(format!("log-MGF at non-finite θ = {theta}")));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let shift = values
        .iter()
        .map(|d| theta * d)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum = par::chunked_sum(exec, values, |d| (theta * d - shift).exp());
    Ok(shift + (sum / values.len() as f64).ln())
}

pub fn log_mgf_empirical(diffs: &DifferenceSample, theta: f64) -> Result<f64> {
    log_mgf_values(diffs.values(), theta, Execution::default())
}

/// φ̂′(θ): the mean of D under the exponentially tilted empirical law.
pub fn tilted_mean(diffs: &DifferenceSample, theta: f64) -> f64 {
    let v = diffs.values();
    let shift = v.iter().map(|d| theta * d).fold(f64::NEG_INFINITY, f64::max);
    let (num, den) = v.iter().fold((0.0, 0.0), |(n, s), d| {
        let w = (theta * d - shift).exp();
        (n + w * d, s + w)
    });
    num / den
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

struct GoldenOutcome {
    theta: f64,
    value: f64,
    iterations: usize,
    evaluations: usize,
}

fn golden_max<G: FnMut(f64) -> Result<f64>>(g: &mut G, mut lo: f64, mut hi: f64, tol: f64) -> Result<GoldenOutcome> {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    let mut iterations = 0;
    let mut evaluations = 2;
    while hi - lo > tol {
        iterations += 1;
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1)?;
        }
        evaluations += 1;
    }
    let theta = 0.5 * (lo + hi);
    let value = g(theta)?;
    Ok(GoldenOutcome {
        theta,
        value,
        iterations,
        evaluations: evaluations + 1,
    })
}

/// φ*(T) = sup_{θ ≥ 0} [θT − φ(θ)] for convex φ with φ(0) = 0.
///
/// Golden-section search on [0, θ_max]; when the maximizer sits at the upper
/// end the bracket doubles (up to `max_expansions` times) before the result is
/// flagged unbounded.
pub fn legendre_transform<F>(phi: F, threshold: f64, opts: &LegendreOptions) -> Result<ExponentResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(opts.theta_max > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::Input("legendre_transform needs θ_max > 0 and tol > 0".into()));
    }
    let phi0 = phi(0.0)?;
    if phi0.abs() > 1e-12 {
        return Err(Error::Input(format!("φ(0) must be 0, got {phi0}")));
    }
    let mut g = |theta: f64| -> Result<f64> {
        let v = phi(theta)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("φ(θ) is not finite at θ = {theta}")));
        }
        Ok(theta * threshold - v)
    };

    let mut lo = 0.0;
    let mut hi = opts.theta_max;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut unbounded = false;
    let mut expansions = 0;
    let best = loop {
        let out = golden_max(&mut g, lo, hi, opts.tol)?;
        iterations += out.iterations;
        evaluations += out.evaluations;
        let at_edge = hi - out.theta <= 2.0 * opts.tol;
        if at_edge && g(hi)? > g(hi - 4.0 * opts.tol)? {
            evaluations += 2;
            if expansions == opts.max_expansions {
                unbounded = true;
                break GoldenOutcome { theta: hi, value: g(hi)?, ..out };
            }
            expansions += 1;
            lo = hi;
            hi *= 2.0;
            continue;
        }
        break out;
    };

    let (theta_star, exponent) = if best.value <= 0.0 || best.theta <= opts.tol {
        (0.0, 0.0)
    } else {
        (best.theta, best.value)
    };
    Ok(ExponentResult {
        error_kind: ErrorKind::Type1,
        threshold,
        theta_star,
        exponent,
        unbounded,
        diagnostics: OptimizerDiagnostics {
            iterations,
            bracket: (lo, hi),
            evaluations,
        },
    })
}

/// Type-I exponent sup_θ [θT − φ̂∞(θ)] from null differences S(X,p∞) − S(X,p1).
pub fn type1_exponent_empirical(
    null_diffs: &DifferenceSample,
    threshold: f64,
    opts: &LegendreOptions,
) -> Result<ExponentResult> {
    if null_diffs.source() != Hypothesis::Null {
        return Err(Error::Input("type-I exponent needs a null difference sample".into()));
    }
    let v = null_diffs.values();
    let mut r = legendre_transform(|t| log_mgf_values(v, t, opts.exec), threshold, opts)?;
    r.error_kind = ErrorKind::Type1;
    Ok(r)
}

/// Type-II exponent sup_θ [−θT − φ̂1(θ)] from alternative differences S(X,p1) − S(X,p∞).
pub fn type2_exponent_empirical(
    alt_diffs: &DifferenceSample,
    threshold: f64,
    opts: &LegendreOptions,
) -> Result<ExponentResult> {
    if alt_diffs.source() != Hypothesis::Alternative {
        return Err(Error::Input("type-II exponent needs an alternative difference sample".into()));
    }
    let v = alt_diffs.values();
    let mut r = legendre_transform(|t| log_mgf_values(v, t, opts.exec), -threshold, opts)?;
    r.error_kind = ErrorKind::Type2;
    r.threshold = threshold;
    Ok(r)
}

/// For p∞ = N(μ∞, Σ), p1 = N(μ1, Σ) with shift μ = μ1 − μ∞, the statistic
/// D(x) = S(x,p∞) − S(x,p1) = μᵀΣ⁻²(x − μ∞ − μ/2) is linear in x.
/// `a = ½μᵀΣ⁻²μ` is the Fisher divergence (both directions) and
/// `v = μᵀΣ⁻³μ` the variance of D under either hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianShiftConstants {
    pub a: f64,
    pub v: f64,
}

impl GaussianShiftConstants {
    pub fn new(null: &GaussianParams, alt_mean: &DVector<f64>) -> Result<Self> {
        ensure_dim(null.dim(), alt_mean.len(), "gaussian alternative mean")?;
        let mu = alt_mean - null.mean();
        Ok(Self {
            a: 0.5 * mu.dot(&(null.precision2() * &mu)),
            v: mu.dot(&(null.precision3() * &mu)),
        })
    }

    /// Mean and variance of the type-I statistic under P∞ (equivalently of the
    /// type-II statistic S(X,p1) − S(X,p∞) under P1): both N(−a, v).
    pub fn difference_law(&self) -> (f64, f64) {
        (-self.a, self.v)
    }

    pub fn type1(&self, threshold: f64) -> f64 {
        quadratic_rate(threshold + self.a, self.v)
    }

    pub fn type2(&self, threshold: f64) -> f64 {
        quadratic_rate(self.a - threshold, self.v)
    }
}

fn quadratic_rate(gap: f64, v: f64) -> f64 {
    if gap <= 0.0 {
        0.0
    } else if v == 0.0 {
        f64::INFINITY
    } else {
        gap * gap / (2.0 * v)
    }
}

/// Closed-form type-I exponent (T + a)² / (2v) for T > −a, else 0.
pub fn gaussian_type1_exponent(null: &GaussianParams, alt_mean: &DVector<f64>, threshold: f64) -> Result<f64> {
    Ok(GaussianShiftConstants::new(null, alt_mean)?.type1(threshold))
}

/// Closed-form type-II exponent (a − T)² / (2v) for T < a, else 0.
pub fn gaussian_type2_exponent(null: &GaussianParams, alt_mean: &DVector<f64>, threshold: f64) -> Result<f64> {
    Ok(GaussianShiftConstants::new(null, alt_mean)?.type2(threshold))
}

/// Variant built on the statistic −½μᵀΣ⁻²(x − μ/2):
/// (4T − μᵀΣ⁻²μ)² / (8μᵀΣ⁻³μ) for T ≥ μᵀΣ⁻²μ/4, else 0.
///
/// Kept for comparison only. Its log-MGF has slope +μᵀΣ⁻²μ/4 at θ = 0 rather
/// than −D_F(p∞‖p1), and it disagrees with Monte Carlo on the actual statistic.
pub fn gaussian_type1_exponent_quarter_scaled(
    null: &GaussianParams,
    alt_mean: &DVector<f64>,
    threshold: f64,
) -> Result<f64> {
    let c = GaussianShiftConstants::new(null, alt_mean)?;
    let q2 = 2.0 * c.a;
    if 4.0 * threshold < q2 {
        return Ok(0.0);
    }
    Ok((4.0 * threshold - q2).powi(2) / (8.0 * c.v))
}

/// (−D_F(p∞‖p1), D_F(p1‖p∞)): thresholds strictly inside give positive
/// type-I and type-II exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRange {
    pub lo: f64,
    pub hi: f64,
    /// Both divergences vanish (identical models); the range is (0, 0).
    pub degenerate: bool,
}

impl ThresholdRange {
    pub fn contains(&self, t: f64) -> bool {
        !self.degenerate && self.lo < t && t < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn from_divergences(df_null_alt: f64, df_alt_null: f64) -> Self {
        const DEGENERATE: f64 = 1e-12;
        if df_null_alt.abs() <= DEGENERATE && df_alt_null.abs() <= DEGENERATE {
            return Self { lo: 0.0, hi: 0.0, degenerate: true };
        }
        Self {
            lo: -df_null_alt,
            hi: df_alt_null,
            degenerate: false,
        }
    }
}

/// Where the Fisher divergences come from.
#[derive(Debug, Clone, Copy)]
pub enum DivergenceSource<'a> {
    /// Sample means: E∞[D] = −D_F(p∞‖p1) and E1[D′] = −D_F(p1‖p∞).
    Samples {
        null_diffs: &'a DifferenceSample,
        alt_diffs: &'a DifferenceSample,
    },
    Gaussian {
        null: &'a GaussianParams,
        alt_mean: &'a DVector<f64>,
    },
}

pub fn threshold_range(source: DivergenceSource<'_>) -> Result<ThresholdRange> {
    match source {
        DivergenceSource::Samples { null_diffs, alt_diffs } => {
            if null_diffs.source() != Hypothesis::Null || alt_diffs.source() != Hypothesis::Alternative {
                return Err(Error::Input("threshold_range: samples have the wrong orientation".into()));
            }
            Ok(ThresholdRange::from_divergences(-null_diffs.mean(), -alt_diffs.mean()))
        }
        DivergenceSource::Gaussian { null, alt_mean } => {
            let c = GaussianShiftConstants::new(null, alt_mean)?;
            Ok(ThresholdRange::from_divergences(c.a, c.a))
        }
    }
}
