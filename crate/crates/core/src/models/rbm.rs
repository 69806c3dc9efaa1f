//! Gauss–Bernoulli restricted Boltzmann machine with unit visible variance.
//!
//! Convention: p(x, h) ∝ exp(−½‖x − b‖² + xᵀWh + cᵀh), h ∈ {0,1}^{d_h}.
//! Summing out h gives the free energy
//! F(x) = ½‖x − b‖² − Σ_j softplus((Wᵀx)_j + c_j) and p(x) ∝ exp(−F(x)).

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};
use crate::score::ScoreModel;
use crate::special::{sigmoid, softplus};

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// d_x × d_h
    pub w: DMatrix<f64>,
    /// visible bias, length d_x
    pub b: DVector<f64>,
    /// hidden bias, length d_h
    pub c: DVector<f64>,
}

impl RbmParams {
    pub fn new(w: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let p = Self { w, b, c };
        p.validate()?;
        Ok(p)
    }

    /// All-zero parameters; the visible marginal is then N(0, I).
    pub fn zeros(d_x: usize, d_h: usize) -> Self {
        Self {
            w: DMatrix::zeros(d_x, d_h),
            b: DVector::zeros(d_x),
            c: DVector::zeros(d_h),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.nrows() != self.b.len() || self.w.ncols() != self.c.len() {
            return Err(Error::Input(format!(
                "rbm: W is {}x{} but b has {} and c has {} entries",
                self.w.nrows(),
                self.w.ncols(),
                self.b.len(),
                self.c.len()
            )));
        }
        if self.b.is_empty() {
            return Err(Error::Input("rbm: need at least one visible unit".into()));
        }
        if self.w.iter().chain(self.b.iter()).chain(self.c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("rbm: non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn d_x(&self) -> usize {
        self.b.len()
    }

    pub fn d_h(&self) -> usize {
        self.c.len()
    }

    /// Hidden pre-activations Wᵀx + c.
    pub fn hidden_input(&self, x: &[f64]) -> DVector<f64> {
        self.w.tr_mul(&DVector::from_column_slice(x)) + &self.c
    }
}

/// F(x) = ½‖x − b‖² − Σ_j softplus((Wᵀx)_j + c_j).
pub fn rbm_free_energy(params: &RbmParams, x: &[f64]) -> Result<f64> {
    ensure_dim(params.d_x(), x.len(), "rbm_free_energy")?;
    let quad = 0.5 * x.iter().zip(params.b.iter()).map(|(v, b)| (v - b) * (v - b)).sum::<f64>();
    let soft: f64 = params.hidden_input(x).iter().map(|&a| softplus(a)).sum();
    Ok(quad - soft)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    params: RbmParams,
}

pub fn rbm_model(params: RbmParams) -> RbmModel {
    RbmModel { params }
}

impl RbmModel {
    pub fn params(&self) -> &RbmParams {
        &self.params
    }

    fn hidden_means(&self, x: &[f64]) -> DVector<f64> {
        self.params.hidden_input(x).map(sigmoid)
    }
}

impl ScoreModel for RbmModel {
    fn dim(&self) -> usize {
        self.params.d_x()
    }

    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        self.score_terms(x).0
    }

    fn laplacian_log_density(&self, x: &[f64]) -> f64 {
        self.score_terms(x).1
    }

    // ∇log p = −(x − b) + Wδ,  Δlog p = Σ_i [−1 + Σ_j W_ij² δ_j(1 − δ_j)]
    fn score_terms(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let p = &self.params;
        let delta = self.hidden_means(x);
        let grad = &p.w * &delta - (DVector::from_column_slice(x) - &p.b);
        let curvature = delta.map(|d| d * (1.0 - d));
        let w_sq_col_sums = p.w.component_mul(&p.w).row_sum_tr();
        let lap = -(p.d_x() as f64) + w_sq_col_sums.dot(&curvature);
        (grad.as_slice().to_vec(), lap)
    }

    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        rbm_free_energy(&self.params, x).ok().map(|f| -f)
    }
}

/// Mean Hyvärinen score of the RBM over `xs`, written out coordinate-wise:
/// Σ_i [½(x_i − b_i − (Wδ)_i)² + Σ_j W_ij² δ_j(1 − δ_j) − 1],
/// δ_j = sigmoid((Wᵀx)_j + c_j).
pub fn rbm_hyvarinen_closed_form(params: &RbmParams, xs: &[Vec<f64>]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Input("rbm_hyvarinen_closed_form: empty sample".into()));
    }
    let (d_x, d_h) = (params.d_x(), params.d_h());
    let mut total = 0.0;
    let mut delta = vec![0.0; d_h];
    for x in xs {
        ensure_dim(d_x, x.len(), "rbm_hyvarinen_closed_form")?;
        for (j, dj) in delta.iter_mut().enumerate() {
            let mut a = params.c[j];
            for i in 0..d_x {
                a += params.w[(i, j)] * x[i];
            }
            *dj = sigmoid(a);
        }
        for i in 0..d_x {
            let mut w_delta = 0.0;
            let mut curv = 0.0;
            for (j, dj) in delta.iter().enumerate() {
                let w = params.w[(i, j)];
                w_delta += w * dj;
                curv += w * w * dj * (1.0 - dj);
            }
            let r = x[i] - params.b[i] - w_delta;
            total += 0.5 * r * r + curv - 1.0;
        }
    }
    Ok(total / xs.len() as f64)
}
