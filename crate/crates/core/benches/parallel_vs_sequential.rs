use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scoretest::exponents::log_mgf_values;
use scoretest::models::{gaussian_model, quartic_model, GaussianParams, QuarticExpFamilyParams, RbmParams};
use scoretest::samplers::{mala_chain, run_chains, sample_gaussian_exact, ChainConfig};
use scoretest::testing::{empirical_error_sweep, SweepConfig};
use scoretest::train::sm_gradient;
use scoretest::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sweep(c: &mut Criterion) {
    let null = GaussianParams::isotropic(vec![0.0, 0.0]).unwrap();
    let alt = GaussianParams::isotropic(vec![1.0, 0.0]).unwrap();
    let null_pool = sample_gaussian_exact(&null, 10_000, 1);
    let alt_pool = sample_gaussian_exact(&alt, 10_000, 2);
    let (p, q) = (gaussian_model(null), gaussian_model(alt));
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SweepConfig {
            trials_per_n: 2_000,
            exec,
            ..SweepConfig::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| empirical_error_sweep(&null_pool, &alt_pool, &p, &q, &cfg, 0, None).unwrap())
        });
    }
    g.finish();
}

fn log_mgf(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f64> = (0..100_000).map(|_| rng.random_range(-2.0..1.0)).collect();
    let mut g = c.benchmark_group("log_mgf");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| log_mgf_values(&values, 0.7, exec).unwrap())
        });
    }
    g.finish();
}

fn chains(c: &mut Criterion) {
    let model = quartic_model(QuarticExpFamilyParams::new(1.0, 2).unwrap());
    let cfg = ChainConfig::mala(0.4, 7);
    let mut g = c.benchmark_group("run_chains");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                run_chains(exec, &cfg, 8, 40_000, |cfg, n| mala_chain(&model, &[0.0, 0.0], cfg, n)).unwrap()
            })
        });
    }
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (dx, dh) = (20, 40);
    let w = DMatrix::from_fn(dx, dh, |_, _| rng.random_range(-0.1..0.1));
    let params = RbmParams::new(w, DVector::zeros(dx), DVector::zeros(dh)).unwrap();
    let batch: Vec<Vec<f64>> = (0..512).map(|_| (0..dx).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let mut g = c.benchmark_group("sm_gradient");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sm_gradient(&params, &batch, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, log_mgf, chains, gradient);
criterion_main!(benches);
