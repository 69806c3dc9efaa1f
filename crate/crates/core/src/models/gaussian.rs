use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};
use crate::score::ScoreModel;

/// Mean and covariance of a multivariate normal, with cached precision powers.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    precision: DMatrix<f64>,
    precision2: DMatrix<f64>,
    precision3: DMatrix<f64>,
    log_det_cov: f64,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Input("gaussian: dimension must be positive".into()));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Input(format!(
                "gaussian: covariance is {}x{}, mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("gaussian: non-finite parameter".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::Input(format!(
                "gaussian: covariance not symmetric (max asymmetry {asym:e})"
            )));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Input("gaussian: covariance is not positive definite".into()))?;
        let precision = chol.inverse();
        let precision2 = &precision * &precision;
        let precision3 = &precision2 * &precision;
        let ident_err = (&cov * &precision - DMatrix::<f64>::identity(d, d)).amax();
        if ident_err > 1e-10 {
            return Err(Error::Input(format!(
                "gaussian: covariance too ill-conditioned (|ΣΣ⁻¹ − I| = {ident_err:e})"
            )));
        }
        let chol_lower = chol.l();
        let log_det_cov = 2.0 * chol_lower.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            cov,
            chol_lower,
            precision,
            precision2,
            precision3,
            log_det_cov,
        })
    }

    /// N(mean, I).
    pub fn isotropic(mean: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        Self::new(DVector::from_vec(mean), DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }
    /// Lower Cholesky factor L with LLᵀ = Σ.
    pub fn chol_lower(&self) -> &DMatrix<f64> {
        &self.chol_lower
    }
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }
    /// Σ⁻²
    pub fn precision2(&self) -> &DMatrix<f64> {
        &self.precision2
    }
    /// Σ⁻³
    pub fn precision3(&self) -> &DMatrix<f64> {
        &self.precision3
    }
    pub fn log_det_cov(&self) -> f64 {
        self.log_det_cov
    }

    /// Same covariance, different mean.
    pub fn with_mean(&self, mean: DVector<f64>) -> Result<Self> {
        ensure_dim(self.dim(), mean.len(), "gaussian mean")?;
        let mut out = self.clone();
        out.mean = mean;
        Ok(out)
    }
}

/// Multivariate normal as a [`ScoreModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    params: GaussianParams,
}

/// Wrap Gaussian parameters as a score model.
pub fn gaussian_model(params: GaussianParams) -> GaussianModel {
    GaussianModel { params }
}

impl GaussianModel {
    pub fn params(&self) -> &GaussianParams {
        &self.params
    }

    fn centered(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x) - &self.params.mean
    }
}

impl ScoreModel for GaussianModel {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn grad_log_density(&self, x: &[f64]) -> Vec<f64> {
        let g = -(&self.params.precision * self.centered(x));
        g.as_slice().to_vec()
    }

    fn laplacian_log_density(&self, _x: &[f64]) -> f64 {
        -self.params.precision.trace()
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        let d = self.dim() as f64;
        Some(
            self.unnorm_log_density(x)?
                - 0.5 * (d * (2.0 * std::f64::consts::PI).ln() + self.params.log_det_cov),
        )
    }

    fn unnorm_log_density(&self, x: &[f64]) -> Option<f64> {
        let z = self.centered(x);
        Some(-0.5 * z.dot(&(&self.params.precision * &z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{check_model_derivatives, hyvarinen_score_point};
    use rand::{Rng, SeedableRng};

    fn sigma_null() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0])
    }

    #[test]
    fn standard_normal_at_origin() {
        let m = gaussian_model(GaussianParams::isotropic(vec![0.0; 3]).unwrap());
        assert_eq!(m.grad_log_density(&[0.0; 3]), vec![0.0; 3]);
        assert_eq!(m.laplacian_log_density(&[0.0; 3]), -3.0);
    }

    #[test]
    fn correlated_laplacian() {
        // Σ⁻¹ = 1/(1−0.49) [[1,−0.7],[−0.7,1]] ⇒ trace = 2/0.51
        let m = gaussian_model(GaussianParams::new(DVector::zeros(2), sigma_null()).unwrap());
        let expected = -2.0 / 0.51;
        assert!((m.laplacian_log_density(&[0.0, 0.0]) - expected).abs() < 1e-12);
        assert!((expected + 3.9216).abs() < 1e-4);
    }

    #[test]
    fn rejects_invalid_covariances() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(GaussianParams::new(DVector::zeros(2), asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianParams::new(DVector::zeros(2), indefinite).is_err());
        assert!(GaussianParams::new(DVector::zeros(3), sigma_null()).is_err());
    }

    #[test]
    fn log_density_is_normalized_offset_of_unnormalized() {
        let m = gaussian_model(
            GaussianParams::new(DVector::from_vec(vec![0.5, -1.0]), sigma_null()).unwrap(),
        );
        let c0 = m.log_density(&[0.0, 0.0]).unwrap() - m.unnorm_log_density(&[0.0, 0.0]).unwrap();
        let c1 = m.log_density(&[2.0, 1.0]).unwrap() - m.unnorm_log_density(&[2.0, 1.0]).unwrap();
        assert!((c0 - c1).abs() < 1e-8);
        // 1-D standard normal at 0: −½ log 2π
        let s = gaussian_model(GaussianParams::isotropic(vec![0.0]).unwrap());
        assert!((s.log_density(&[0.0]).unwrap() + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = gaussian_model(
            GaussianParams::new(DVector::from_vec(vec![0.3, -0.2]), sigma_null()).unwrap(),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let r = check_model_derivatives(&m, &x, 1e-4).unwrap();
            assert!(r.passes(1e-6), "{r:?}");
        }
    }

    #[test]
    fn score_is_quadratic_form_identity() {
        let p = GaussianParams::new(DVector::from_vec(vec![1.0, 2.0]), sigma_null()).unwrap();
        let m = gaussian_model(p.clone());
        let x = [0.4, -0.9];
        let z = DVector::from_column_slice(&x) - p.mean();
        let pz = p.precision() * z;
        let expected = 0.5 * pz.norm_squared() - p.precision().trace();
        assert!((hyvarinen_score_point(&m, &x).unwrap() - expected).abs() < 1e-14);
    }
}
