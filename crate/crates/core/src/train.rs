//! Score-matching fit of a Gauss–Bernoulli RBM: minimize the empirical
//! Hyvärinen score, which equals the Fisher divergence to the data up to a
//! data-only constant.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::models::{rbm_hyvarinen_closed_form, RbmParams};
use crate::par::{self, Execution};
use crate::rng;
use crate::special::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Starting parameters (cold start from the null model, typically).
    pub init: RbmParams,
    pub seed: u64,
    /// Use only this many training points, chosen deterministically from `seed`.
    pub train_n: Option<usize>,
    /// Keep W fixed and train only the biases.
    pub freeze_weights: bool,
    pub exec: Execution,
}

impl TrainConfig {
    pub fn new(init: RbmParams) -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            init,
            seed: 0,
            train_n: None,
            freeze_weights: false,
            exec: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Input("epochs and batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Input(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.train_n == Some(0) {
            return Err(Error::Input("train_n must be ≥ 1".into()));
        }
        self.init.validate()
    }
}

/// Gradient of the objective with respect to (W, b, c).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl RbmGradient {
    fn zeros(d_x: usize, d_h: usize) -> Self {
        Self {
            w: DMatrix::zeros(d_x, d_h),
            b: DVector::zeros(d_x),
            c: DVector::zeros(d_h),
        }
    }

    fn add_assign(&mut self, o: &RbmGradient) {
        self.w += &o.w;
        self.b += &o.b;
        self.c += &o.c;
    }

    fn scale(&mut self, s: f64) {
        self.w *= s;
        self.b *= s;
        self.c *= s;
    }
}

/// Mean Hyvärinen score of the RBM on `batch`.
pub fn sm_objective(params: &RbmParams, batch: &[Vec<f64>]) -> Result<f64> {
    rbm_hyvarinen_closed_form(params, batch)
}

// Per point, with a = Wᵀx + c, δ = σ(a), s = δ(1−δ), r = x − b − Wδ:
//   L      = ½‖r‖² + Σ_ij W_ij² s_j − d_x
//   ∂L/∂a_j = −s_j (Wᵀr)_j + s_j(1 − 2δ_j) Σ_i W_ij²  =: g_j
//   ∂L/∂b_i = −r_i,  ∂L/∂c_j = g_j,  ∂L/∂W_ij = −r_i δ_j + 2 W_ij s_j + x_i g_j
fn accumulate_point(params: &RbmParams, w_sq_cols: &DVector<f64>, x: &[f64], acc: &mut RbmGradient) {
    let xv = DVector::from_column_slice(x);
    let a = params.w.tr_mul(&xv) + &params.c;
    let delta = a.map(sigmoid);
    let s = delta.map(|d| d * (1.0 - d));
    let r = &xv - &params.b - &params.w * &delta;
    let wt_r = params.w.tr_mul(&r);
    let g = DVector::from_fn(params.d_h(), |j, _| {
        -s[j] * wt_r[j] + s[j] * (1.0 - 2.0 * delta[j]) * w_sq_cols[j]
    });
    acc.b -= &r;
    acc.c += &g;
    for j in 0..params.d_h() {
        for i in 0..params.d_x() {
            acc.w[(i, j)] += -r[i] * delta[j] + 2.0 * params.w[(i, j)] * s[j] + x[i] * g[j];
        }
    }
}

/// Closed-form gradient of [`sm_objective`] averaged over `batch`.
pub fn sm_gradient(params: &RbmParams, batch: &[Vec<f64>], exec: Execution) -> Result<RbmGradient> {
    if batch.is_empty() {
        return Err(Error::Input("sm_gradient: empty batch".into()));
    }
    for x in batch {
        ensure_dim(params.d_x(), x.len(), "sm_gradient")?;
    }
    let w_sq_cols = params.w.component_mul(&params.w).row_sum_tr();
    let partials = par::map_chunks(exec, batch, |chunk| {
        let mut acc = RbmGradient::zeros(params.d_x(), params.d_h());
        for x in chunk {
            accumulate_point(params, &w_sq_cols, x, &mut acc);
        }
        acc
    });
    let mut total = RbmGradient::zeros(params.d_x(), params.d_h());
    for p in &partials {
        total.add_assign(p);
    }
    total.scale(1.0 / batch.len() as f64);
    Ok(total)
}

/// Deterministic subsample of `n` points (without replacement) keyed by `seed`.
pub fn subsample(data: &[Vec<f64>], n: usize, seed: u64) -> Vec<Vec<f64>> {
    if n >= data.len() {
        return data.to_vec();
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut rng::substream(seed, &[rng::name_key("subsample")]));
    idx.truncate(n);
    idx.sort_unstable();
    idx.into_iter().map(|i| data[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    #[serde(skip)]
    pub params: Option<RbmParams>,
    /// Full-data objective before training (index 0) and after each epoch.
    pub loss_curve: Vec<f64>,
    pub initial_objective: f64,
    /// Objective of the returned parameters (the best seen).
    pub final_objective: f64,
    pub train_n: usize,
}

impl FitOutcome {
    pub fn params(&self) -> &RbmParams {
        self.params.as_ref().expect("fit outcome carries parameters")
    }

    pub fn write_loss_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "objective"])?;
        for (e, v) in self.loss_curve.iter().enumerate() {
            w.write_record([e.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn diverged(obj: f64, initial: f64) -> bool {
    !obj.is_finite() || obj > initial + 10.0 * initial.abs().max(1.0)
}

/// Mini-batch gradient descent on the empirical Hyvärinen score.
///
/// Returns the parameters with the lowest full-data objective seen, so the
/// final objective never exceeds the initial one. Three consecutive epochs
/// far above the initial objective abort with [`Error::Training`].
pub fn score_matching_fit(data: &[Vec<f64>], cfg: &TrainConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("score_matching_fit: no training data".into()));
    }
    let data = match cfg.train_n {
        Some(n) => subsample(data, n, cfg.seed),
        None => data.to_vec(),
    };
    let mut params = cfg.init.clone();
    let initial = sm_objective(&params, &data)?;
    let mut curve = vec![initial];
    let mut best = (initial, params.clone());
    let mut bad_epochs = 0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng::substream(cfg.seed, &[rng::name_key("epoch"), epoch as u64]));
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let g = sm_gradient(&params, &batch, cfg.exec)?;
            if !cfg.freeze_weights {
                params.w -= cfg.learning_rate * &g.w;
                params.c -= cfg.learning_rate * &g.c;
            }
            params.b -= cfg.learning_rate * &g.b;
        }
        let obj = if params.validate().is_ok() { sm_objective(&params, &data)? } else { f64::NAN };
        curve.push(obj);
        if diverged(obj, initial) {
            bad_epochs += 1;
            if bad_epochs >= 3 || !obj.is_finite() {
                return Err(Error::Training { epoch, objective: obj, curve });
            }
        } else {
            bad_epochs = 0;
        }
        if obj < best.0 {
            best = (obj, params.clone());
        }
    }
    Ok(FitOutcome {
        params: Some(best.1),
        loss_curve: curve,
        initial_objective: initial,
        final_objective: best.0,
        train_n: data.len(),
    })
}
