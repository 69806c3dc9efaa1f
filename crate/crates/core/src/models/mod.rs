//! Closed-form score models: multivariate Gaussian, quartic exponential
//! family, and Gauss–Bernoulli RBM, plus their JSON parameter files.

mod gaussian;
mod quartic;
mod rbm;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::ScoreModel;

pub use gaussian::{gaussian_model, GaussianModel, GaussianParams};
pub use quartic::{
    quartic_energy, quartic_log_partition, quartic_model, LogPartition, QuadratureSpec,
    QuarticExpFamilyParams, QuarticModel,
};
pub use rbm::{rbm_free_energy, rbm_hyvarinen_closed_form, rbm_model, RbmModel, RbmParams};

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    Quartic {
        tau: f64,
        d: usize,
    },
    Rbm {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(r) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Input(format!(
            "{what}: row {r} has {} entries, expected {ncols}",
            rows[r].len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Validate shapes (and positive-definiteness) and build the model.
    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            ModelSpec::Gaussian { mean, cov } => {
                let cov = matrix_from_rows(cov, "gaussian cov")?;
                Model::Gaussian(gaussian_model(GaussianParams::new(
                    DVector::from_column_slice(mean),
                    cov,
                )?))
            }
            ModelSpec::Quartic { tau, d } => {
                Model::Quartic(quartic_model(QuarticExpFamilyParams::new(*tau, *d)?))
            }
            ModelSpec::Rbm { w, b, c } => {
                let mut wm = matrix_from_rows(w, "rbm W")?;
                if w.is_empty() {
                    wm = DMatrix::zeros(b.len(), c.len());
                }
                Model::Rbm(rbm_model(RbmParams::new(
                    wm,
                    DVector::from_column_slice(b),
                    DVector::from_column_slice(c),
                )?))
            }
        })
    }
}

impl From<&GaussianParams> for ModelSpec {
    fn from(p: &GaussianParams) -> Self {
        ModelSpec::Gaussian {
            mean: p.mean().iter().copied().collect(),
            cov: matrix_to_rows(p.cov()),
        }
    }
}

impl From<&RbmParams> for ModelSpec {
    fn from(p: &RbmParams) -> Self {
        ModelSpec::Rbm {
            w: matrix_to_rows(&p.w),
            b: p.b.iter().copied().collect(),
            c: p.c.iter().copied().collect(),
        }
    }
}

impl From<&QuarticExpFamilyParams> for ModelSpec {
    fn from(p: &QuarticExpFamilyParams) -> Self {
        ModelSpec::Quartic { tau: p.tau, d: p.d }
    }
}

/// Any of the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gaussian(GaussianModel),
    Quartic(QuarticModel),
    Rbm(RbmModel),
}

impl Model {
    pub fn spec(&self) -> ModelSpec {
        match self {
            Model::Gaussian(m) => m.params().into(),
            Model::Quartic(m) => m.params().into(),
            Model::Rbm(m) => m.params().into(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Model::Gaussian(_) => "gaussian",
            Model::Quartic(_) => "quartic",
            Model::Rbm(_) => "rbm",
        }
    }

    /// A reasonable chain starting point: the mean, the origin, or the visible bias.
    pub fn mode_proxy(&self) -> Vec<f64> {
        match self {
            Model::Gaussian(m) => m.params().mean().iter().copied().collect(),
            Model::Quartic(m) => vec![0.0; m.params().d],
            Model::Rbm(m) => m.params().b.iter().copied().collect(),
        }
    }

    fn inner(&self) -> &dyn ScoreModel {
        match self {
            Model::Gaussian(m) => m,
            Model::Quartic(m) => m,
            Model::Rbm(m) => m,
        }
    }
}

impl ScoreModel for Model {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        self.inner().grad_log_density(x)
    }
    fn laplacian_log_density(&self, x: &[f64]) -> f64 {
        self.inner().laplacian_log_density(x)
    }
    fn score_terms(&self, x: &[f64]) -> (Vec<f64>, f64) {
        self.inner().score_terms(x)
    }
    fn log_density(&self, x: &[f64]) -> Option<f64> {
        self.inner().log_density(x)
    }
    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        self.inner().unnorm_log_density(x)
    }
}
