//! Acceptance checks. Each test prints one `PASS`/`FAIL` line for its
//! criterion (plus detail) and then asserts it.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use scoretest::exponents::{
    gaussian_type1_exponent, legendre_transform, log_mgf_values, type1_exponent_empirical, GaussianShiftConstants,
    LegendreOptions,
};
use scoretest::models::{
    gaussian_model, quartic_model, rbm_hyvarinen_closed_form, rbm_model, GaussianParams, Model, ModelSpec,
    QuarticExpFamilyParams, RbmParams,
};
use scoretest::rng::{substream, StreamRng};
use scoretest::samplers::{
    hmc_chain, mala_chain, rbm_exact_mixture_moments, rbm_gibbs_chain, sample_gaussian_exact, ChainConfig,
};
use scoretest::score::{difference_sample, fisher_divergence_terms, hyvarinen_score_point};
use scoretest::testing::{neyman_pearson_comparison, ErrorSweepTable, SWEEP_CSV_HEADER};
use scoretest::train::{sm_gradient, sm_objective};
use scoretest::{Execution, Hypothesis};
use scoretest_cli::args::{CheckArgs, GlobalArgs, IngestArgs, TrainArgs};
use scoretest_cli::commands::{check_model, cmd_ingest, cmd_sweep, cmd_train_rbm};
use scoretest_cli::config::{DataPools, ExperimentConfig, ModelSource, SweepSettings};

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    println!(
        "ACCEPTANCE {id:>2} {} | {name} | {:.2}s | {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn unit_pair() -> (GaussianParams, DVector<f64>) {
    (GaussianParams::isotropic(vec![0.0, 0.0]).unwrap(), DVector::from_vec(vec![1.0, 0.0]))
}

fn gaussian_pair_config(seed: u64) -> ExperimentConfig {
    let (null, mu) = unit_pair();
    let alt = null.with_mean(mu).unwrap();
    ExperimentConfig {
        null: Some(ModelSource::Inline(ModelSpec::from(&null))),
        alternative: Some(ModelSource::Inline(ModelSpec::from(&alt))),
        seed,
        ..ExperimentConfig::default()
    }
}

/// Mean and batch-means standard error (50 batches) for correlated chains.
fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let batches = 50;
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn random_rbm(d_x: usize, d_h: usize, w_scale: f64, rng: &mut StreamRng) -> RbmParams {
    let n = Normal::new(0.0, w_scale).unwrap();
    let u = Uniform::new(-0.5, 0.5).unwrap();
    RbmParams::new(
        DMatrix::from_fn(d_x, d_h, |_, _| n.sample(rng)),
        DVector::from_fn(d_x, |_, _| u.sample(rng)),
        DVector::from_fn(d_h, |_, _| u.sample(rng)),
    )
    .unwrap()
}

fn normal_vec(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn criterion_01_gaussian_closed_form_vs_monte_carlo() {
    let start = Instant::now();
    let (null, mu) = unit_pair();
    let closed = gaussian_type1_exponent(&null, &mu, 0.0).unwrap();
    let xs = sample_gaussian_exact(&null, 1_000_000, 101);
    let alt = null.with_mean(mu).unwrap();
    let ds = difference_sample(
        &gaussian_model(null),
        &gaussian_model(alt),
        &xs,
        Hypothesis::Null,
        Execution::default(),
    )
    .unwrap();
    let emp = type1_exponent_empirical(&ds, 0.0, &LegendreOptions::default()).unwrap().exponent;
    let elapsed = start.elapsed();
    let pass = (closed - 0.125).abs() <= 1e-12 && (emp - closed).abs() <= 0.005 && elapsed.as_secs_f64() < 10.0;
    report(1, "Gaussian closed form vs MC exponent", pass, elapsed, &format!("closed {closed:.6}, empirical (m=1e6) {emp:.6}"));
    assert!(pass);
}

#[test]
fn criterion_02_cramer_convergence_at_desk_scale() {
    let start = Instant::now();
    let mut cfg = gaussian_pair_config(202);
    cfg.threshold_policy = "fixed:0".into();
    cfg.sweep = SweepSettings {
        n_list: (0..8).map(|k| 1usize << k).collect(),
        trials_per_n: 10_000,
        pool_size: 10_000,
        runs: 1,
    };
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_sweep(&cfg, dir.path(), Execution::default()).unwrap();
    let elapsed = start.elapsed();
    let rows = out.table.unwrap().rows;
    let target = 0.125;
    let rates: Vec<f64> = rows.iter().map(|r| -r.emp_exp1).collect();
    // one-sigma band of each rate from the binomial error of α̂
    let band: Vec<f64> = rows
        .iter()
        .map(|r| (r.alpha * (1.0 - r.alpha) / 10_000.0).sqrt() / (r.alpha * r.n as f64))
        .collect();
    let gaps: Vec<f64> = rates.iter().map(|r| (r - target).abs()).collect();
    let trend_ok = gaps.windows(2).zip(band.windows(2)).all(|(g, b)| g[1] <= g[0] + 3.0 * (b[0] + b[1]));
    let last = *rates.last().unwrap();
    let pass = (last - target).abs() <= 0.03 && trend_ok && elapsed.as_secs_f64() < 120.0;
    let detail = format!(
        "rate(n=128) {last:.4} (target {target} ± 0.03), nonincreasing gap {trend_ok}, rates {:?}, smoothing floor {:.2e}",
        rates.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>(),
        out.smoothing_floor
    );
    report(2, "Cramér convergence of −log α̂_n/n at n=128", pass, elapsed, &detail);
    assert!(pass);
}

#[test]
fn criterion_03_chernoff_bound_for_exact_tail() {
    let start = Instant::now();
    let (null, mu) = unit_pair();
    let k = GaussianShiftConstants::new(&null, &mu).unwrap();
    let (mean, var) = k.difference_law();
    let mut worst_ratio: f64 = 0.0;
    let mut ok = true;
    for t in [-0.25, 0.0, 0.25] {
        let rate = gaussian_type1_exponent(&null, &mu, t).unwrap();
        for n in 1..=128usize {
            let alpha = NormalDist::new(mean, (var / n as f64).sqrt()).unwrap().sf(t);
            let bound = (-(n as f64) * rate).exp();
            ok &= alpha <= bound;
            worst_ratio = worst_ratio.max(alpha / bound);
        }
    }
    let elapsed = start.elapsed();
    let pass = ok && elapsed.as_secs_f64() < 1.0;
    report(3, "Chernoff bound on exact α_n", pass, elapsed, &format!("max α_n / bound = {worst_ratio:.4}"));
    assert!(pass);
}

/// Paired check that the mean score difference equals −D_F on the same draws.
fn slope_check(null: &Model, alt: &Model, xs: &[Vec<f64>]) -> (f64, f64, f64) {
    let ds = difference_sample(null, alt, xs, Hypothesis::Null, Execution::default()).unwrap();
    let fisher = fisher_divergence_terms(null, alt, xs).unwrap();
    let sum: Vec<f64> = ds.values().iter().zip(&fisher).map(|(d, f)| d + f).collect();
    let (m, se) = batch_mean_se(&sum);
    (ds.mean(), -fisher.iter().sum::<f64>() / fisher.len() as f64, (m / se).abs())
}

#[test]
fn criterion_04_slope_identity() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;

    let (null, mu) = unit_pair();
    let k = GaussianShiftConstants::new(&null, &mu).unwrap();
    let xs = sample_gaussian_exact(&null, 100_000, 401);
    let ds = difference_sample(
        &gaussian_model(null.clone()),
        &gaussian_model(null.with_mean(mu).unwrap()),
        &xs,
        Hypothesis::Null,
        Execution::default(),
    )
    .unwrap();
    let (m, v) = mean_var(ds.values());
    let z = (m + k.a).abs() / (v / ds.len() as f64).sqrt();
    pass &= z <= 4.0;
    details.push(format!("gaussian mean {m:.5} vs {:.5} ({z:.2} se)", -k.a));

    let q0 = Model::Quartic(quartic_model(QuarticExpFamilyParams::new(1.0, 2).unwrap()));
    let q1 = Model::Quartic(quartic_model(QuarticExpFamilyParams::new(1.5, 2).unwrap()));
    let xs = mala_chain(&q0, &[0.0, 0.0], &ChainConfig::mala(0.5, 402), 100_000).unwrap().samples;
    let (m, target, z) = slope_check(&q0, &q1, &xs);
    pass &= z <= 4.0;
    details.push(format!("quartic mean {m:.5} vs {target:.5} ({z:.2} se)"));

    let spec = ModelSpec::load(fixtures().join("models/rbm_null.json")).unwrap();
    let r0 = spec.build().unwrap();
    let Model::Rbm(rbm0) = &r0 else { panic!("fixture is not an RBM") };
    let p0 = rbm0.params().clone();
    let mut r = substream(403, &[]);
    let p1 = scoretest::perturb::perturb_rbm_weights(&p0, 0.3, &mut r).unwrap();
    let r1 = Model::Rbm(rbm_model(p1));
    let cfg = ChainConfig { thinning: 2, ..ChainConfig::gibbs(404) };
    let xs = rbm_gibbs_chain(&p0, p0.b.as_slice(), &cfg, 100_000).unwrap().samples;
    let (m, target, z) = slope_check(&r0, &r1, &xs);
    pass &= z <= 4.0;
    details.push(format!("rbm mean {m:.5} vs {target:.5} ({z:.2} se)"));

    let elapsed = start.elapsed();
    pass &= elapsed.as_secs_f64() < 30.0;
    report(4, "mean score difference equals −D_F", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_05_derivative_correctness() {
    let start = Instant::now();
    let tol = 1e-4;
    let mut r = substream(501, &[]);
    let corr = GaussianParams::new(
        DVector::from_vec(vec![0.5, -0.5]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0]),
    )
    .unwrap();
    let models = [
        Model::Gaussian(gaussian_model(corr)),
        Model::Quartic(quartic_model(QuarticExpFamilyParams::new(1.0, 2).unwrap())),
        Model::Rbm(rbm_model(random_rbm(4, 3, 1.0, &mut r))),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for m in &models {
        let c = check_model(m, m.family(), 20, tol, 502).unwrap();
        pass &= c.passed;
        details.push(format!(
            "{} grad {:.1e} lap {:.1e}",
            c.family, c.max_grad_rel_error, c.max_laplacian_rel_error
        ));
    }

    // sm_gradient against central differences of sm_objective
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let params = random_rbm(3, 2, 0.7, &mut r);
        let batch: Vec<Vec<f64>> = (0..16).map(|_| normal_vec(3, &mut r)).collect();
        let g = sm_gradient(&params, &batch, Execution::default()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
        let fd = |f: &dyn Fn(&mut RbmParams, f64)| {
            let mut p = params.clone();
            f(&mut p, h);
            let up = sm_objective(&p, &batch).unwrap();
            let mut p = params.clone();
            f(&mut p, -h);
            let dn = sm_objective(&p, &batch).unwrap();
            (up - dn) / (2.0 * h)
        };
        for i in 0..3 {
            for j in 0..2 {
                worst = worst.max(rel(g.w[(i, j)], fd(&|p, d| p.w[(i, j)] += d)));
            }
            worst = worst.max(rel(g.b[i], fd(&|p, d| p.b[i] += d)));
        }
        for j in 0..2 {
            worst = worst.max(rel(g.c[j], fd(&|p, d| p.c[j] += d)));
        }
    }
    pass &= worst <= tol;
    details.push(format!("sm_gradient {worst:.1e}"));
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs_f64() < 10.0;
    report(5, "derivative checks (20 probes per family) and sm_gradient", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_06_rbm_score_identity() {
    let start = Instant::now();
    let mut r = substream(601, &[]);
    let mut worst: f64 = 0.0;
    let mut largest: f64 = 0.0;
    for _ in 0..100 {
        let params = random_rbm(50, 40, 0.1, &mut r);
        let x = normal_vec(50, &mut r);
        let closed = rbm_hyvarinen_closed_form(&params, std::slice::from_ref(&x)).unwrap();
        let generic = hyvarinen_score_point(&rbm_model(params), &x).unwrap();
        worst = worst.max((closed - generic).abs());
        largest = largest.max(closed.abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed.as_secs_f64() < 5.0;
    report(
        6,
        "RBM closed-form score equals generic evaluation (d_x=50, d_h=40)",
        pass,
        elapsed,
        &format!("max |diff| {worst:.2e} (scores up to {largest:.1})"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_sampler_oracles() {
    let start = Instant::now();
    let target = gaussian_model(GaussianParams::isotropic(vec![0.0]).unwrap());
    let variance = |xs: &[Vec<f64>]| mean_var(&xs.iter().map(|x| x[0]).collect::<Vec<_>>()).1;
    let mala = mala_chain(&target, &[0.0], &ChainConfig::mala(0.9, 701), 100_000).unwrap();
    let hmc = hmc_chain(&target, &[0.0], &ChainConfig::hmc(0.2, 10, 702), 100_000).unwrap();
    let (vm, vh) = (variance(&mala.samples), variance(&hmc.samples));
    let mut pass = (vm - 1.0).abs() <= 0.03 && (vh - 1.0).abs() <= 0.03;
    let mut details = vec![format!(
        "MALA var {vm:.4} (acc {:.2}), HMC var {vh:.4} (acc {:.2})",
        mala.acceptance_rate, hmc.acceptance_rate
    )];

    let mut r = substream(703, &[]);
    let params = random_rbm(3, 2, 0.8, &mut r);
    let (mean, cov) = rbm_exact_mixture_moments(&params).unwrap();
    let gibbs = rbm_gibbs_chain(&params, params.b.as_slice(), &ChainConfig::gibbs(704), 200_000).unwrap();
    let mut worst_z: f64 = 0.0;
    for i in 0..3 {
        let (m, se) = batch_mean_se(&gibbs.samples.iter().map(|x| x[i]).collect::<Vec<_>>());
        worst_z = worst_z.max((m - mean[i]).abs() / se);
        for j in i..3 {
            let prod: Vec<f64> = gibbs.samples.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).collect();
            let (c, se) = batch_mean_se(&prod);
            worst_z = worst_z.max((c - cov[(i, j)]).abs() / se);
        }
    }
    pass &= worst_z <= 4.0;
    details.push(format!("Gibbs moments worst deviation {worst_z:.2} se"));
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs_f64() < 60.0;
    report(7, "sampler oracles", pass, elapsed, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_legendre_vs_grid() {
    let start = Instant::now();
    let mut r = substream(801, &[]);
    let u = |r: &mut StreamRng, lo: f64, hi: f64| Uniform::new(lo, hi).unwrap().sample(r);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (exponent, grid) = if k % 2 == 0 {
            // smooth polynomial cumulant: slope + curvature + quartic term
            let (s, c, q) = (u(&mut r, -1.0, 1.0), u(&mut r, 0.5, 2.0), u(&mut r, 0.0, 0.5));
            let t = s + u(&mut r, 0.05, 2.0);
            let phi = move |th: f64| s * th + c * th * th + q * th.powi(4);
            let e = legendre_transform(|th| Ok(phi(th)), t, &LegendreOptions::default()).unwrap().exponent;
            let g = (0..100_000).map(|i| i as f64 * 2e-5).map(|th| th * t - phi(th)).fold(f64::NEG_INFINITY, f64::max);
            (e, g)
        } else {
            // empirical log-MGF of a small sample, threshold inside its range
            let vals: Vec<f64> = (0..25).map(|_| u(&mut r, -2.0, 1.0)).collect();
            let (m, _) = mean_var(&vals);
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let t = m + u(&mut r, 0.1, 0.6) * (max - m);
            let phi = |th: f64| log_mgf_values(&vals, th, Execution::Sequential);
            let e = legendre_transform(phi, t, &LegendreOptions::default()).unwrap().exponent;
            let g = (0..100_000)
                .map(|i| i as f64 * 1e-4)
                .map(|th| th * t - phi(th).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            (e, g)
        };
        worst = worst.max((exponent - grid).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-6 && elapsed.as_secs_f64() < 5.0;
    report(8, "Legendre optimizer vs 1e5-point grid", pass, elapsed, &format!("max |diff| {worst:.2e}"));
    assert!(pass);
}

fn np_check(null: &GaussianParams, alt: &GaussianParams, seed: u64, label: &str) -> (bool, String) {
    let null_pool = sample_gaussian_exact(null, 10_000, seed);
    let alt_pool = sample_gaussian_exact(alt, 10_000, seed + 1);
    let (m0, m1) = (gaussian_model(null.clone()), gaussian_model(alt.clone()));
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1usize, 8, 64] {
        let c = neyman_pearson_comparison(&null_pool, &alt_pool, &m0, &m1, n, 10_000, 0.05, seed + 2, Execution::default())
            .unwrap();
        ok &= c.beta_lrt <= c.beta_hst + 3.0 * c.pooled_se;
        parts.push(format!("n={n}: β_LRT {:.4} β_HST {:.4} (α {:.3}/{:.3})", c.beta_lrt, c.beta_hst, c.alpha_lrt, c.alpha_hst));
    }
    (ok, format!("{label}: {}", parts.join(", ")))
}

#[test]
fn criterion_09_neyman_pearson_dominance() {
    let start = Instant::now();
    let (null, mu) = unit_pair();
    let alt = null.with_mean(mu.clone()).unwrap();
    let (pass_unit, d1) = np_check(&null, &alt, 901, "Σ=I");
    // with correlated covariance the two statistics differ and the LRT is strictly better
    let corr = GaussianParams::new(DVector::zeros(2), DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.7, 1.0])).unwrap();
    let (pass_corr, d2) = np_check(&corr, &corr.with_mean(mu).unwrap(), 911, "Σ correlated");
    let elapsed = start.elapsed();
    let pass = pass_unit && pass_corr && elapsed.as_secs_f64() < 120.0;
    report(9, "Neyman-Pearson dominance of the LRT", pass, elapsed, &format!("{d1}; {d2}"));
    assert!(pass);
}

#[test]
fn criterion_10_pipeline_integration() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let fx = fixtures();
    let ingest = cmd_ingest(
        10,
        &IngestArgs {
            input: fx.join("kdd_style_500.csv"),
            schema: fx.join("kdd_style_schema.json"),
            null_label: "normal".into(),
            unknown_max: 100,
            stats: None,
        },
        &root.join("ingest"),
    )
    .unwrap();
    let null_csv = root.join("ingest").join(&ingest.splits["null"].0);
    let alt_csv = root.join("ingest").join(&ingest.splits["attack_all"].0);

    let base = ExperimentConfig::resolve(&GlobalArgs { seed: Some(10), ..GlobalArgs::default() }).unwrap();
    let train = |data: &Path, init: Option<PathBuf>, out: &Path| {
        let args = TrainArgs {
            data: Some(data.to_path_buf()),
            d_h: Some(4),
            epochs: Some(100),
            learning_rate: Some(1e-2),
            batch_size: None,
            init,
        };
        cmd_train_rbm(&base, &args, out, Execution::default()).unwrap()
    };
    let null_fit = train(&null_csv, None, &root.join("null"));
    let null_model = root.join("null").join(&null_fit.model);
    let alt_fit = train(&alt_csv, Some(null_model.clone()), &root.join("alt"));

    let mut cfg = base.clone();
    cfg.null = Some(ModelSource::Inline(ModelSpec::load(&null_model).unwrap()));
    cfg.alternative = Some(ModelSource::Inline(ModelSpec::load(root.join("alt").join(&alt_fit.model)).unwrap()));
    cfg.data = DataPools { null_csv: Some(null_csv), alt_csv: Some(alt_csv) };
    cfg.sweep = SweepSettings { n_list: vec![1, 2, 4, 8, 16, 32], trials_per_n: 2_000, pool_size: 1_000, runs: 2 };
    let sweep = cmd_sweep(&cfg, &root.join("sweep"), Execution::default()).unwrap();

    let sweep_csv = root.join("sweep").join(&sweep.csv);
    let header = std::fs::read_to_string(&sweep_csv).unwrap().lines().next().unwrap().to_string();
    let rows = ErrorSweepTable::read_csv(&sweep_csv).unwrap();
    let schema_ok = header == SWEEP_CSV_HEADER.join(",") && rows.len() == 12;
    let exps_ok = rows.iter().all(|r| {
        [r.emp_exp1, r.emp_exp2, r.theo_exp1, r.theo_exp2].iter().all(|e| e.is_finite() && -e > 0.0)
    });
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("sweep/sweep.json")).unwrap()).unwrap();
    let seed_ok = meta["seed"] == 10 && meta["config"]["seed"] == 10;
    let check = scoretest_cli::commands::cmd_check(
        &cfg,
        &CheckArgs { model: None, probes: 20, tol: 1e-4 },
        &root.join("check"),
    )
    .is_ok();

    let mut details = vec![format!(
        "splits null {} attack {}; loss {:.3} -> {:.3}; rows {}; schema {schema_ok}; exponents positive+finite {exps_ok}; seed embedded {seed_ok}; trained models pass check {check}",
        ingest.splits["null"].1,
        ingest.splits["attack_all"].1,
        null_fit.initial_objective,
        null_fit.final_objective,
        rows.len()
    )];
    let mut pass = schema_ok && exps_ok && seed_ok && check && null_fit.final_objective < null_fit.initial_objective;

    // full-dataset Table 1 counts, only when the real data is available
    if let Ok(path) = std::env::var("SCORETEST_KDD_PATH") {
        let (ok, d) = table1_counts(Path::new(&path), root);
        pass &= ok;
        details.push(d);
    } else {
        details.push("KDD Table 1 counts skipped (SCORETEST_KDD_PATH unset)".into());
    }
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs_f64() < 120.0;
    report(10, "ingest + train-rbm + sweep pipeline", pass, elapsed, &details.join("; "));
    assert!(pass);
}

/// Per-category sizes of the 10% KDD training file.
const TABLE1: [(&str, usize); 11] = [
    ("normal", 87832),
    ("neptune", 51820),
    ("back", 968),
    ("teardrop", 918),
    ("satan", 906),
    ("warezclient", 893),
    ("ipsweep", 651),
    ("smurf", 641),
    ("portsweep", 416),
    ("pod", 206),
    ("nmap", 158),
];

fn table1_counts(path: &Path, root: &Path) -> (bool, String) {
    let mut columns = serde_json::Map::new();
    for c in 0..41 {
        let role = if (1..=3).contains(&c) { "categorical" } else { "continuous" };
        columns.insert(c.to_string(), role.into());
    }
    columns.insert("41".into(), "label".into());
    let schema_path = root.join("kdd_schema.json");
    std::fs::write(&schema_path, serde_json::json!({ "columns": columns }).to_string()).unwrap();
    let (ds, _) = scoretest::data::ingest_csv(path, &scoretest::data::Schema::load(&schema_path).unwrap()).unwrap();
    let counts = ds.label_counts();
    let mismatches: Vec<String> = TABLE1
        .iter()
        .filter(|(l, n)| counts.get(*l) != Some(n))
        .map(|(l, n)| format!("{l}: {:?} vs {n}", counts.get(*l)))
        .collect();
    let parts = scoretest::data::partition_by_label(&ds, "normal", scoretest::data::UnknownRule::default()).unwrap();
    (
        mismatches.is_empty(),
        format!("Table 1 mismatches {mismatches:?}; unknown split {} rows", parts.unknown.len()),
    )
}
