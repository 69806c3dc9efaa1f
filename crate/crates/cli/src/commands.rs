//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the result it serialized.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use scoretest::data::{self, IngestReport, Schema, StandardizationStats, UnknownRule};
use scoretest::exponents::{
    threshold_range, type1_exponent_empirical, type2_exponent_empirical, DivergenceSource, ExponentReport,
    GaussianShiftConstants, LegendreOptions, ThresholdRange,
};
use scoretest::models::{Model, ModelSpec, RbmParams};
use scoretest::perturb::{perturb_model, perturb_rbm_weights, PerturbTarget};
use scoretest::score::{check_model_derivatives, difference_sample, DEFAULT_FD_STEP};
use scoretest::testing::{
    choose_threshold, empirical_error_sweep, ErrorSweepTable, SweepConfig, ThresholdChoice, TheoreticalExponents,
};
use scoretest::train::{score_matching_fit, TrainConfig};
use scoretest::{io, rng, Error, Execution, Hypothesis, ScoreModel};

use crate::args::{CheckArgs, IngestArgs, PerturbArgs, TrainArgs};
use crate::config::ExperimentConfig;
use crate::pools::{draw_pool, read_pool};
use crate::CliError;

/// Standard deviation of the random initial RBM weights when no cold-start model is given.
pub const INIT_WEIGHT_SCALE: f64 = 0.1;

type Points = Vec<Vec<f64>>;

#[derive(Debug, Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: &'a R,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// `<command>.json` with the seed and resolved config, plus `meta.json`,
/// the only file carrying wall-clock timestamps.
fn write_artifact<C: Serialize, R: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    config: &C,
    result: &R,
    started: SystemTime,
) -> Result<(), CliError> {
    write_json(&out.join(format!("{command}.json")), &Artifact { command, seed, config, result })?;
    let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    write_json(
        &out.join("meta.json"),
        &serde_json::json!({
            "command": command,
            "seed": seed,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": secs(started),
            "finished_unix": secs(SystemTime::now()),
            "config": config,
        }),
    )
}

fn prepare_out(out: &Path) -> Result<SystemTime, CliError> {
    std::fs::create_dir_all(out)?;
    Ok(SystemTime::now())
}

fn models(cfg: &ExperimentConfig) -> Result<(Model, Model), CliError> {
    let null = cfg.null_spec()?.build()?;
    let alt = cfg.alt_spec()?.build()?;
    if null.dim() != alt.dim() {
        return Err(CliError::Usage(format!(
            "null model has dimension {}, alternative {}",
            null.dim(),
            alt.dim()
        )));
    }
    Ok((null, alt))
}

// ---------------------------------------------------------------- check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheck {
    pub role: String,
    pub family: String,
    pub probes: usize,
    pub max_grad_rel_error: f64,
    pub max_laplacian_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub step: f64,
    pub tolerance: f64,
    pub models: Vec<ModelCheck>,
    pub passed: bool,
}

/// Derivative check of one model at `probes` points scattered around its mode proxy.
pub fn check_model(model: &Model, role: &str, probes: usize, tol: f64, seed: u64) -> Result<ModelCheck, CliError> {
    let mut r = rng::substream(seed, &[rng::name_key("check"), rng::name_key(role)]);
    let center = model.mode_proxy();
    let (mut g, mut l) = (0.0f64, 0.0f64);
    for _ in 0..probes {
        let x: Vec<f64> = center
            .iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(&mut r);
                c + 0.75 * z
            })
            .collect();
        let rep = check_model_derivatives(model, &x, DEFAULT_FD_STEP)?;
        g = g.max(rep.grad_rel_error);
        l = l.max(rep.laplacian_rel_error);
    }
    Ok(ModelCheck {
        role: role.into(),
        family: model.family().into(),
        probes,
        max_grad_rel_error: g,
        max_laplacian_rel_error: l,
        passed: g <= tol && l <= tol,
    })
}

pub fn cmd_check(cfg: &ExperimentConfig, args: &CheckArgs, out: &Path) -> Result<CheckOutput, CliError> {
    let started = prepare_out(out)?;
    let mut targets = Vec::new();
    match &args.model {
        Some(p) => targets.push(("model".to_string(), ModelSpec::load(p)?.build()?)),
        None => {
            if cfg.null.is_none() && cfg.alternative.is_none() {
                return Err(CliError::Usage("check needs --model or a config with models".into()));
            }
            if cfg.null.is_some() {
                targets.push(("null".to_string(), cfg.null_spec()?.build()?));
            }
            if cfg.alternative.is_some() {
                targets.push(("alternative".to_string(), cfg.alt_spec()?.build()?));
            }
        }
    }
    let models = targets
        .iter()
        .map(|(role, m)| check_model(m, role, args.probes, args.tol, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let result = CheckOutput {
        step: DEFAULT_FD_STEP,
        tolerance: args.tol,
        passed: models.iter().all(|m| m.passed),
        models,
    };
    write_artifact(out, "check", cfg.seed, cfg, &result, started)?;
    if !result.passed {
        return Err(Error::Numeric(format!("derivative check failed (tolerance {})", args.tol)).into());
    }
    Ok(result)
}

// ---------------------------------------------------------------- exponent

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub type1: f64,
    pub type2: f64,
    /// Fisher divergence ½μᵀΣ⁻²μ (equal in both directions).
    pub fisher_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentOutput {
    pub threshold: ThresholdChoice,
    pub threshold_range: ThresholdRange,
    /// Models are indistinguishable by their scores; exponents are zero.
    pub degenerate: bool,
    /// The threshold lies outside the range where both exponents are positive.
    pub threshold_outside_range: bool,
    pub type1: ExponentReport,
    pub type2: ExponentReport,
    pub gaussian_closed_form: Option<ClosedForm>,
}

/// Gaussian pair differing only in the mean: the closed form applies.
fn gaussian_shift(null: &Model, alt: &Model) -> Option<(scoretest::models::GaussianParams, DVector<f64>)> {
    match (null, alt) {
        (Model::Gaussian(a), Model::Gaussian(b)) if a.params().cov() == b.params().cov() => {
            Some((a.params().clone(), b.params().mean().clone()))
        }
        _ => None,
    }
}

fn null_and_alt_pools(
    cfg: &ExperimentConfig,
    null: &Model,
    alt: &Model,
    n: usize,
    run: u64,
    exec: Execution,
) -> Result<(Points, Points), CliError> {
    let pool = |m: &Model, csv: &Option<PathBuf>, name: &str| match csv {
        Some(p) => read_pool(p, m.dim()),
        None => draw_pool(m, &cfg.sampler, n, rng::derive_seed(cfg.seed, &[rng::name_key(name), run]), exec),
    };
    Ok((pool(null, &cfg.data.null_csv, "pool-null")?, pool(alt, &cfg.data.alt_csv, "pool-alt")?))
}

pub fn cmd_exponent(cfg: &ExperimentConfig, m_override: Option<usize>, out: &Path, exec: Execution) -> Result<ExponentOutput, CliError> {
    let started = prepare_out(out)?;
    let (null, alt) = models(cfg)?;
    let m = m_override.unwrap_or(cfg.m);
    let (null_pts, alt_pts) = null_and_alt_pools(cfg, &null, &alt, m, 0, exec)?;
    let null_diffs = difference_sample(&null, &alt, &null_pts, Hypothesis::Null, exec)?;
    let alt_diffs = difference_sample(&null, &alt, &alt_pts, Hypothesis::Alternative, exec)?;
    let range = threshold_range(DivergenceSource::Samples { null_diffs: &null_diffs, alt_diffs: &alt_diffs })?;
    let alt_stats: Vec<f64> = alt_diffs.values().iter().map(|v| -v).collect();
    let threshold = choose_threshold(null_diffs.values(), &alt_stats, cfg.policy()?)?;
    let t = threshold.threshold;
    if range.degenerate {
        log::warn!("models are indistinguishable by their scores; exponents are zero");
    } else if !range.contains(t) {
        log::warn!("threshold {t} lies outside ({}, {}); one exponent will be zero", range.lo, range.hi);
    }
    let opts = LegendreOptions { exec, ..LegendreOptions::default() };
    let type1 = type1_exponent_empirical(&null_diffs, t, &opts)?;
    let type2 = type2_exponent_empirical(&alt_diffs, t, &opts)?;
    let gaussian_closed_form = match gaussian_shift(&null, &alt) {
        Some((p, mu)) => {
            let k = GaussianShiftConstants::new(&p, &mu)?;
            Some(ClosedForm { type1: k.type1(t), type2: k.type2(t), fisher_divergence: k.a })
        }
        None => None,
    };
    let result = ExponentOutput {
        threshold,
        threshold_range: range,
        degenerate: range.degenerate,
        threshold_outside_range: !range.contains(t),
        type1: type1.report(null_diffs.len()),
        type2: type2.report(alt_diffs.len()),
        gaussian_closed_form,
    };
    write_artifact(out, "exponent", cfg.seed, cfg, &result, started)?;
    Ok(result)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRunInfo {
    pub run: usize,
    pub threshold: ThresholdChoice,
    pub theoretical: TheoreticalExponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    /// Relative to the output directory, like every path in a result.
    pub csv: PathBuf,
    pub smoothing_floor: f64,
    pub runs: Vec<SweepRunInfo>,
    #[serde(skip)]
    pub table: Option<ErrorSweepTable>,
}

pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, exec: Execution) -> Result<SweepOutput, CliError> {
    let started = prepare_out(out)?;
    let (null, alt) = models(cfg)?;
    let policy = cfg.policy()?;
    let s = &cfg.sweep;
    let mut table: Option<ErrorSweepTable> = None;
    let mut runs = Vec::with_capacity(s.runs);
    for run in 0..s.runs {
        let (null_pool, alt_pool) = null_and_alt_pools(cfg, &null, &alt, s.pool_size, run as u64, exec)?;
        let null_stats = scoretest::score::score_differences(&null, &alt, &null_pool, exec)?;
        let alt_stats = scoretest::score::score_differences(&null, &alt, &alt_pool, exec)?;
        let threshold = choose_threshold(&null_stats, &alt_stats, policy)?;
        let theoretical = TheoreticalExponents::from_pools(&null_stats, &alt_stats, threshold.threshold, exec)?;
        let sweep_cfg = SweepConfig {
            n_list: s.n_list.clone(),
            trials_per_n: s.trials_per_n,
            pool_size: s.pool_size,
            threshold: threshold.threshold,
            runs: s.runs,
            seed: rng::derive_seed(cfg.seed, &[rng::name_key("sweep")]),
            exec,
            cache_scores: true,
        };
        let t = empirical_error_sweep(&null_pool, &alt_pool, &null, &alt, &sweep_cfg, run, Some(theoretical))?;
        log::info!("run {run}: threshold {:.5}", threshold.threshold);
        match &mut table {
            Some(acc) => acc.extend(t),
            None => table = Some(t),
        }
        runs.push(SweepRunInfo { run, threshold, theoretical });
    }
    let table = table.ok_or_else(|| CliError::Usage("sweep needs at least one run".into()))?;
    let csv = PathBuf::from("sweep.csv");
    table.save_csv(out.join(&csv))?;
    let result = SweepOutput { csv, smoothing_floor: table.smoothing_floor, runs, table: Some(table) };
    write_artifact(out, "sweep", cfg.seed, cfg, &result, started)?;
    Ok(result)
}

// ---------------------------------------------------------------- train-rbm

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutput {
    pub model: PathBuf,
    pub loss_csv: PathBuf,
    pub train_n: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub epochs: usize,
    pub cold_start: bool,
}

pub fn cmd_train_rbm(cfg: &ExperimentConfig, args: &TrainArgs, out: &Path, exec: Execution) -> Result<TrainOutput, CliError> {
    let started = prepare_out(out)?;
    let mut settings = cfg.train.clone();
    if let Some(p) = &args.data {
        settings.data_csv = Some(p.clone());
    }
    if let Some(v) = args.d_h {
        settings.d_h = v;
    }
    if let Some(v) = args.epochs {
        settings.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        settings.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        settings.batch_size = v;
    }
    if let Some(p) = &args.init {
        settings.init = Some(crate::config::ModelSource::Inline(ModelSpec::load(p)?));
    }
    let data_path = settings
        .data_csv
        .clone()
        .ok_or_else(|| CliError::Usage("train-rbm needs --data or train.data_csv".into()))?;
    let data = io::read_points_csv(&data_path)?;
    let d_x = data.first().map(Vec::len).ok_or_else(|| CliError::Usage(format!("{} has no points", data_path.display())))?;

    let init = match &settings.init {
        Some(crate::config::ModelSource::Inline(spec)) => match spec.build()? {
            Model::Rbm(r) => r.params().clone(),
            other => return Err(CliError::Usage(format!("cold-start model must be an RBM, got {}", other.family()))),
        },
        Some(crate::config::ModelSource::Path(p)) => match ModelSpec::load(p)?.build()? {
            Model::Rbm(r) => r.params().clone(),
            other => return Err(CliError::Usage(format!("cold-start model must be an RBM, got {}", other.family()))),
        },
        None => {
            let mut r = rng::substream(cfg.seed, &[rng::name_key("rbm-init")]);
            perturb_rbm_weights(&RbmParams::zeros(d_x, settings.d_h), INIT_WEIGHT_SCALE, &mut r)?
        }
    };
    if init.d_x() != d_x {
        return Err(CliError::Usage(format!("initial RBM has d_x = {}, data has {d_x}", init.d_x())));
    }
    let cold_start = settings.init.is_some();
    let train_cfg = TrainConfig {
        epochs: settings.epochs,
        batch_size: settings.batch_size,
        learning_rate: settings.learning_rate,
        init,
        seed: rng::derive_seed(cfg.seed, &[rng::name_key("train")]),
        train_n: settings.train_n,
        freeze_weights: settings.freeze_weights,
        exec,
    };
    let fit = match score_matching_fit(&data, &train_cfg) {
        Ok(f) => f,
        Err(Error::Training { epoch, objective, curve }) => {
            let mut w = csv::Writer::from_path(out.join("loss.csv")).map_err(scoretest::Error::from)?;
            w.write_record(["epoch", "objective"]).map_err(scoretest::Error::from)?;
            for (e, v) in curve.iter().enumerate() {
                w.write_record([e.to_string(), v.to_string()]).map_err(scoretest::Error::from)?;
            }
            w.flush()?;
            return Err(Error::Training { epoch, objective, curve }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let model_path = PathBuf::from("model.json");
    ModelSpec::from(fit.params()).save(out.join(&model_path))?;
    let loss_csv = PathBuf::from("loss.csv");
    fit.write_loss_csv(std::fs::File::create(out.join(&loss_csv))?)?;
    let mut resolved = cfg.clone();
    resolved.train = settings.clone();
    resolved.train.data_csv = Some(data_path);
    let result = TrainOutput {
        model: model_path,
        loss_csv,
        train_n: fit.train_n,
        initial_objective: fit.initial_objective,
        final_objective: fit.final_objective,
        epochs: settings.epochs,
        cold_start,
    };
    write_artifact(out, "train-rbm", cfg.seed, &resolved, &result, started)?;
    Ok(result)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOutput {
    pub report: IngestReport,
    pub features: Vec<String>,
    /// Split name → (file, rows).
    pub splits: BTreeMap<String, (PathBuf, usize)>,
    pub stats: PathBuf,
}

#[derive(Debug, Serialize)]
struct IngestConfig<'a> {
    input: &'a Path,
    schema: &'a Schema,
    null_label: &'a str,
    unknown_max: usize,
    stats: Option<&'a Path>,
}

/// Standardization statistics come from the null split only, unless supplied.
pub fn cmd_ingest(seed: u64, args: &IngestArgs, out: &Path) -> Result<IngestOutput, CliError> {
    let started = prepare_out(out)?;
    let schema = Schema::load(&args.schema)?;
    let (raw, report) = data::ingest_csv(&args.input, &schema)?;
    log::info!("ingested {} rows: {:?}", raw.len(), report.label_counts);
    let rule = UnknownRule { max_count: args.unknown_max };
    let raw_parts = data::partition_by_label(&raw, &args.null_label, rule)?;
    let stats: StandardizationStats = match &args.stats {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => data::fit_standardization(&raw_parts.null)?,
    };
    let z = data::standardize(&raw, Some(&stats))?;
    let parts = data::partition_by_label(&z, &args.null_label, rule)?;

    let mut splits = BTreeMap::new();
    let mut save = |name: String, ds: &data::Dataset| -> Result<(), CliError> {
        let path = PathBuf::from(format!("{name}.csv"));
        io::write_points_csv(out.join(&path), &ds.features)?;
        splits.insert(name, (path, ds.len()));
        Ok(())
    };
    save("null".into(), &parts.null)?;
    for (label, ds) in &parts.attacks {
        save(format!("attack_{label}"), ds)?;
    }
    save("unknown".into(), &parts.unknown)?;
    let non_null: Vec<usize> = (0..z.len()).filter(|&i| z.labels[i] != args.null_label).collect();
    save(
        "attack_all".into(),
        &data::Dataset {
            features: non_null.iter().map(|&i| z.features[i].clone()).collect(),
            labels: non_null.iter().map(|&i| z.labels[i].clone()).collect(),
            feature_names: z.feature_names.clone(),
            stats: None,
        },
    )?;
    let stats_path = PathBuf::from("stats.json");
    write_json(&out.join(&stats_path), &stats)?;
    let result = IngestOutput { report, features: stats.feature_names.clone(), splits, stats: stats_path };
    let config = IngestConfig {
        input: &args.input,
        schema: &schema,
        null_label: &args.null_label,
        unknown_max: args.unknown_max,
        stats: args.stats.as_deref(),
    };
    write_artifact(out, "ingest", seed, &config, &result, started)?;
    Ok(result)
}

// ---------------------------------------------------------------- perturb

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbOutput {
    pub model: PathBuf,
    pub target: PerturbTarget,
    pub sigma: f64,
}

pub fn cmd_perturb(seed: u64, args: &PerturbArgs, out: &Path) -> Result<PerturbOutput, CliError> {
    let started = prepare_out(out)?;
    let source = ModelSpec::load(&args.model)?;
    let model = source.build()?;
    let target = PerturbTarget::from(args.target);
    let mut r = rng::substream(seed, &[rng::name_key("perturb")]);
    let spec = perturb_model(&model, target, args.sigma, &mut r)?;
    let path = PathBuf::from("model.json");
    spec.save(out.join(&path))?;
    let result = PerturbOutput { model: path, target, sigma: args.sigma };
    let config = serde_json::json!({ "source": source, "target": target, "sigma": args.sigma });
    write_artifact(out, "perturb", seed, &config, &result, started)?;
    Ok(result)
}
