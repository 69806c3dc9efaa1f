use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use scoretest::exponents::{legendre_transform, log_mgf_values, type1_exponent_empirical, LegendreOptions};
use scoretest::models::{gaussian_model, quartic_model, GaussianParams, QuarticExpFamilyParams};
use scoretest::score::score_difference;
use scoretest::{DifferenceSample, Execution, Hypothesis};

fn sample_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2..60)
}

proptest! {
    #[test]
    fn log_mgf_is_shift_covariant(values in sample_values(), c in -5.0f64..5.0, theta in 0.0f64..4.0) {
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let a = log_mgf_values(&shifted, theta, Execution::Sequential).unwrap();
        let b = log_mgf_values(&values, theta, Execution::Sequential).unwrap() + theta * c;
        prop_assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
    }

    #[test]
    fn log_mgf_is_convex_and_vanishes_at_zero(values in sample_values(), step in 0.01f64..0.5) {
        prop_assert_eq!(log_mgf_values(&values, 0.0, Execution::Sequential).unwrap(), 0.0);
        let grid: Vec<f64> = (0..40)
            .map(|k| log_mgf_values(&values, k as f64 * step, Execution::Sequential).unwrap())
            .collect();
        for w in grid.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn exponent_nondecreasing_in_threshold(values in prop::collection::vec(-2.0f64..2.0, 5..40), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let ds = DifferenceSample::new(values.clone(), Hypothesis::Null).unwrap();
        let mean = ds.mean();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max - mean > 1e-3);
        // stay below the sample maximum so the supremum is finite
        let (t1, t2) = {
            let a = mean + 0.9 * u.min(v) * (max - mean);
            let b = mean + 0.9 * u.max(v) * (max - mean);
            (a, b)
        };
        let opts = LegendreOptions { exec: Execution::Sequential, ..LegendreOptions::default() };
        let e1 = type1_exponent_empirical(&ds, t1, &opts).unwrap().exponent;
        let e2 = type1_exponent_empirical(&ds, t2, &opts).unwrap().exponent;
        prop_assert!(e1 <= e2 + 1e-9, "{e1} > {e2}");
    }

    #[test]
    fn score_difference_is_antisymmetric(
        m0 in prop::collection::vec(-2.0f64..2.0, 2),
        m1 in prop::collection::vec(-2.0f64..2.0, 2),
        x in prop::collection::vec(-3.0f64..3.0, 2),
        tau in 0.2f64..3.0,
    ) {
        let a = gaussian_model(GaussianParams::isotropic(m0).unwrap());
        let b = gaussian_model(GaussianParams::isotropic(m1).unwrap());
        prop_assert_eq!(score_difference(&a, &b, &x).unwrap(), -score_difference(&b, &a, &x).unwrap());
        let q = quartic_model(QuarticExpFamilyParams::new(tau, 2).unwrap());
        prop_assert_eq!(score_difference(&a, &q, &x).unwrap(), -score_difference(&q, &a, &x).unwrap());
    }

    #[test]
    fn legendre_matches_dense_grid(
        slope in -1.0f64..1.0,
        curv in 0.5f64..2.0,
        quart in 0.0f64..0.5,
        gap in 0.01f64..2.0,
    ) {
        let phi = |t: f64| Ok(slope * t + curv * t * t + quart * t.powi(4));
        let thr = slope + gap;
        let res = legendre_transform(phi, thr, &LegendreOptions::default()).unwrap();
        let grid_max = (0..=100_000)
            .map(|k| {
                let t = k as f64 * 2e-5;
                t * thr - phi(t).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((res.exponent - grid_max).abs() <= 1e-6, "{} vs {grid_max}", res.exponent);
    }
}

#[test]
fn correlated_gaussian_antisymmetry_is_exact() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0]);
    let a = gaussian_model(GaussianParams::new(DVector::from_vec(vec![0.0, 0.0]), cov).unwrap());
    let b = gaussian_model(GaussianParams::isotropic(vec![1.0, 0.0]).unwrap());
    for x in [[0.1, -0.4], [2.0, 3.0], [-1.5, 0.25]] {
        assert_eq!(score_difference(&a, &b, &x).unwrap(), -score_difference(&b, &a, &x).unwrap());
    }
}
