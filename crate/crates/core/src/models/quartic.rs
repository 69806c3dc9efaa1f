use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::ScoreModel;

/// Parameters of p_τ(x) ∝ exp{−τ e(x)} with
/// e(x) = Σ x_i⁴ + Σ_{i≤j} x_i² x_j² (diagonal terms included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticExpFamilyParams {
    pub tau: f64,
    pub d: usize,
}

impl QuarticExpFamilyParams {
    pub fn new(tau: f64, d: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Input(format!("quartic: tau must be positive, got {tau}")));
        }
        if d == 0 {
            return Err(Error::Input("quartic: dimension must be positive".into()));
        }
        Ok(Self { tau, d })
    }
}

/// The energy e(x). Using s = Σx², q = Σx⁴: e = (3q + s²)/2.
pub fn quartic_energy(x: &[f64]) -> f64 {
    let (s, q) = sums(x);
    0.5 * (3.0 * q + s * s)
}

fn sums(x: &[f64]) -> (f64, f64) {
    x.iter().fold((0.0, 0.0), |(s, q), v| {
        let v2 = v * v;
        (s + v2, q + v2 * v2)
    })
}

/// Quartic exponential-family density as a [`ScoreModel`].
///
/// `log_density` is available once a log-partition value has been attached.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticModel {
    params: QuarticExpFamilyParams,
    log_z: Option<f64>,
}

pub fn quartic_model(params: QuarticExpFamilyParams) -> QuarticModel {
    QuarticModel { params, log_z: None }
}

impl QuarticModel {
    pub fn params(&self) -> &QuarticExpFamilyParams {
        &self.params
    }

    pub fn log_z(&self) -> Option<f64> {
        self.log_z
    }

    /// Attach log Z so exact log-densities (and the LRT) become available.
    pub fn with_log_partition(mut self, log_z: f64) -> Self {
        self.log_z = Some(log_z);
        self
    }
}

impl ScoreModel for QuarticModel {
    fn dim(&self) -> usize {
        self.params.d
    }

    // ∂e/∂x_i = 6x_i³ + 2 s x_i
    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        let (s, _) = sums(x);
        let tau = self.params.tau;
        x.iter().map(|v| -tau * (6.0 * v * v * v + 2.0 * s * v)).collect()
    }

    // ∂²e/∂x_i² = 22x_i² + 2s  ⇒  Δe = (22 + 2d) s
    fn laplacian_log_density(&self, x: &[f64]) -> f64 {
        let (s, _) = sums(x);
        -self.params.tau * (22.0 + 2.0 * self.params.d as f64) * s
    }

    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        Some(-self.params.tau * quartic_energy(x))
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.unnorm_log_density(x)? - self.log_z?)
    }
}

/// Tensor-grid trapezoid rule on [−half_width, half_width]^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub half_width: f64,
    pub nodes: usize,
    /// Largest acceptable change in log Z when the grid spacing is halved.
    pub tol: f64,
}

impl QuadratureSpec {
    /// Box wide enough that exp(−τ e) < e^{-40} outside it.
    pub fn for_tau(tau: f64) -> Self {
        Self {
            half_width: (40.0 / tau).powf(0.25),
            nodes: 121,
            tol: 1e-6,
        }
    }
}

/// Result of a log-partition computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPartition {
    pub log_z: f64,
    /// |log Z(refined) − log Z| with the spacing halved.
    pub refinement_change: f64,
    /// `refinement_change <= tol`; false means the grid is too coarse.
    pub converged: bool,
}

const MAX_QUADRATURE_DIM: usize = 3;

fn log_trapezoid(tau: f64, d: usize, half_width: f64, nodes: usize) -> f64 {
    let h = 2.0 * half_width / (nodes - 1) as f64;
    let axis: Vec<(f64, f64)> = (0..nodes)
        .map(|k| {
            let w: f64 = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
            (-half_width + k as f64 * h, w.ln())
        })
        .collect();
    let total = nodes.pow(d as u32);
    let log_cell = d as f64 * h.ln();
    let mut point = vec![0.0; d];
    // e ≥ 0 so the integrand peaks at the origin with value 1; shift by that.
    let mut acc = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        let mut log_w = 0.0;
        for p in point.iter_mut() {
            let (x, lw) = axis[rem % nodes];
            *p = x;
            log_w += lw;
            rem /= nodes;
        }
        acc += (log_w - tau * quartic_energy(&point)).exp();
    }
    acc.ln() + log_cell
}

/// log Z_τ = log ∫ exp(−τ e(x)) dx by tensor-grid quadrature (d ≤ 3).
pub fn quartic_log_partition(params: &QuarticExpFamilyParams, quad: &QuadratureSpec) -> Result<LogPartition> {
    if params.d > MAX_QUADRATURE_DIM {
        return Err(Error::Capability(format!(
            "quadrature supports d ≤ {MAX_QUADRATURE_DIM}, got d = {}; use a Monte Carlo estimate instead",
            params.d
        )));
    }
    if quad.nodes < 3 || !(quad.half_width > 0.0) {
        return Err(Error::Input("quadrature needs ≥ 3 nodes and a positive half-width".into()));
    }
    let log_z = log_trapezoid(params.tau, params.d, quad.half_width, quad.nodes);
    let refined = log_trapezoid(params.tau, params.d, quad.half_width, 2 * quad.nodes - 1);
    let change = (refined - log_z).abs();
    let converged = change <= quad.tol;
    if !converged {
        log::warn!("quartic log-partition not converged: refinement changed log Z by {change:e}");
    }
    Ok(LogPartition {
        log_z,
        refinement_change: change,
        converged,
    })
}
