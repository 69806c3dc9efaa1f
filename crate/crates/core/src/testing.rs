//! Score-based and likelihood-ratio decision rules, threshold selection and
//! the resampling harness that measures error rates across sample sizes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::exponents::{type1_exponent_empirical, type2_exponent_empirical, LegendreOptions};
use crate::par::{self, Execution};
use crate::rng;
use crate::score::{hyvarinen_score_sample, score_difference, score_differences, DifferenceSample, Hypothesis, ScoreModel};

/// Decide H1 iff S_H(X, p∞) − S_H(X, p1) > T (strict).
pub fn hst_decide<A, B>(null_model: &A, alt_model: &B, xs: &[Vec<f64>], threshold: f64) -> Result<bool>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    if xs.is_empty() {
        return Err(Error::Input("hst_decide: empty sample".into()));
    }
    ensure_dim(null_model.dim(), alt_model.dim(), "hst_decide models")?;
    let stat = hyvarinen_score_sample(null_model, xs)? - hyvarinen_score_sample(alt_model, xs)?;
    Ok(stat > threshold)
}

fn normalized_log_density<M: ScoreModel + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    model
        .log_density(x)
        .ok_or_else(|| Error::Capability("likelihood-ratio test needs normalized log-densities".into()))
}

/// Per-point log-likelihood ratio log p1(x) − log p∞(x).
pub fn log_likelihood_ratio<A, B>(null_model: &A, alt_model: &B, x: &[f64]) -> Result<f64>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    ensure_dim(null_model.dim(), x.len(), "log_likelihood_ratio")?;
    Ok(normalized_log_density(alt_model, x)? - normalized_log_density(null_model, x)?)
}

/// (1/n) Σ [log p1(X_i) − log p∞(X_i)].
pub fn lrt_statistic<A, B>(null_model: &A, alt_model: &B, xs: &[Vec<f64>]) -> Result<f64>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    if xs.is_empty() {
        return Err(Error::Input("lrt_statistic: empty sample".into()));
    }
    let mut total = 0.0;
    for x in xs {
        total += log_likelihood_ratio(null_model, alt_model, x)?;
    }
    Ok(total / xs.len() as f64)
}

/// Decide H1 iff the per-sample log-likelihood ratio exceeds `threshold`.
pub fn lrt_decide<A, B>(null_model: &A, alt_model: &B, xs: &[Vec<f64>], threshold: f64) -> Result<bool>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    Ok(lrt_statistic(null_model, alt_model, xs)? > threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    /// Midpoint of the valid range (−D̂_F(p∞‖p1), D̂_F(p1‖p∞)).
    Midpoint,
    /// Equalize the empirical single-observation error rates.
    N1Balance,
    Fixed(f64),
}

impl fmt::Display for ThresholdPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdPolicy::Midpoint => write!(f, "midpoint"),
            ThresholdPolicy::N1Balance => write!(f, "n1-balance"),
            ThresholdPolicy::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

impl FromStr for ThresholdPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "n1-balance" => Ok(Self::N1Balance),
            other => other
                .strip_prefix("fixed:")
                .and_then(|t| t.parse::<f64>().ok())
                .filter(|t| t.is_finite())
                .map(Self::Fixed)
                .ok_or_else(|| Error::Input(format!("unknown threshold policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub policy: ThresholdPolicy,
    /// Pools were perfectly separated; the threshold is the middle of the gap.
    pub separable: bool,
}

fn frac_above(sorted: &[f64], t: f64) -> f64 {
    (sorted.len() - sorted.partition_point(|v| *v <= t)) as f64 / sorted.len() as f64
}

fn frac_at_or_below(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|v| *v <= t) as f64 / sorted.len() as f64
}

/// Pick the test threshold from per-point statistics S(x,p∞) − S(x,p1)
/// evaluated on the null and alternative pools.
pub fn choose_threshold(null_stats: &[f64], alt_stats: &[f64], policy: ThresholdPolicy) -> Result<ThresholdChoice> {
    if null_stats.is_empty() || alt_stats.is_empty() {
        return Err(Error::Input("choose_threshold: empty pool".into()));
    }
    if null_stats.iter().chain(alt_stats).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("choose_threshold: non-finite statistic".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let choice = |threshold, separable| ThresholdChoice { threshold, policy, separable };
    match policy {
        ThresholdPolicy::Fixed(t) => Ok(choice(t, false)),
        ThresholdPolicy::Midpoint => Ok(choice(0.5 * (mean(null_stats) + mean(alt_stats)), false)),
        ThresholdPolicy::N1Balance => {
            let mut null_sorted = null_stats.to_vec();
            let mut alt_sorted = alt_stats.to_vec();
            null_sorted.sort_by(f64::total_cmp);
            alt_sorted.sort_by(f64::total_cmp);
            let null_max = *null_sorted.last().unwrap();
            let alt_min = alt_sorted[0];
            if null_max < alt_min {
                return Ok(choice(0.5 * (null_max + alt_min), true));
            }
            let mut lo = null_sorted[0].min(alt_min);
            let mut hi = null_max.max(*alt_sorted.last().unwrap());
            if lo == hi {
                return Err(Error::Input("choose_threshold: pools are degenerate (all statistics equal)".into()));
            }
            // α(T) decreases and β(T) increases in T
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if frac_above(&null_sorted, mid) > frac_at_or_below(&alt_sorted, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(choice(0.5 * (lo + hi), false))
        }
    }
}

/// Resampling sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub trials_per_n: usize,
    pub pool_size: usize,
    pub threshold: f64,
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub exec: Execution,
    /// Precompute per-point score differences once per pool (default) or
    /// recompute them inside every trial.
    #[serde(default = "default_true")]
    pub cache_scores: bool,
}

fn default_true() -> bool {
    true
}

/// n = 1, 2, 4, …, 128.
pub fn default_n_list() -> Vec<usize> {
    (0..8).map(|k| 1usize << k).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: default_n_list(),
            trials_per_n: 10_000,
            pool_size: 10_000,
            threshold: 0.0,
            runs: 10,
            seed: 0,
            exec: Execution::default(),
            cache_scores: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::Input("n_list must be nonempty with positive entries".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Input("n_list must be sorted ascending".into()));
        }
        if self.trials_per_n == 0 || self.pool_size == 0 || self.runs == 0 {
            return Err(Error::Input("trials, pool size and runs must be positive".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Input("threshold must be finite".into()));
        }
        Ok(())
    }
}

/// One (run, n) row. Exponent columns are logged rates (≤ 0):
/// `emp_exp1 = log(α̂)/n`, `theo_exp1 = −φ*(T)`, and likewise for type II.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweepRow {
    pub run: usize,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub emp_exp1: f64,
    pub emp_exp2: f64,
    pub theo_exp1: f64,
    pub theo_exp2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweepTable {
    pub rows: Vec<ErrorSweepRow>,
    /// Smallest reportable error rate, 1 / (trials + 1).
    pub smoothing_floor: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 8] = ["run", "n", "alpha", "beta", "emp_exp1", "emp_exp2", "theo_exp1", "theo_exp2"];

impl ErrorSweepTable {
    pub fn new(smoothing_floor: f64) -> Self {
        Self { rows: Vec::new(), smoothing_floor }
    }

    pub fn extend(&mut self, other: ErrorSweepTable) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.run.to_string(),
                r.n.to_string(),
                r.alpha.to_string(),
                r.beta.to_string(),
                r.emp_exp1.to_string(),
                r.emp_exp2.to_string(),
                r.theo_exp1.to_string(),
                r.theo_exp2.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ErrorSweepRow>> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != SWEEP_CSV_HEADER {
            return Err(Error::Input(format!("unexpected sweep header {header:?}")));
        }
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }
}

/// Theoretical exponents φ*(T) (≥ 0) attached to each row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalExponents {
    pub type1: f64,
    pub type2: f64,
}

impl TheoreticalExponents {
    /// Empirical Legendre transforms of the pool log-MGFs.
    pub fn from_pools(null_stats: &[f64], alt_stats: &[f64], threshold: f64, exec: Execution) -> Result<Self> {
        let opts = LegendreOptions { exec, ..LegendreOptions::default() };
        let null = DifferenceSample::new(null_stats.to_vec(), Hypothesis::Null)?;
        let alt = DifferenceSample::new(alt_stats.iter().map(|v| -v).collect(), Hypothesis::Alternative)?;
        Ok(Self {
            type1: type1_exponent_empirical(&null, threshold, &opts)?.exponent,
            type2: type2_exponent_empirical(&alt, threshold, &opts)?.exponent,
        })
    }
}

const SIDE_NULL: u64 = 0;
const SIDE_ALT: u64 = 1;

/// Estimate α̂_n and β̂_n by resampling with replacement from the pools.
///
/// Each trial draws from its own substream keyed by (run, n, trial, side), so
/// results are identical across thread counts and between cached and
/// recomputed score differences. Estimates are add-one smoothed.
#[allow(clippy::too_many_arguments)]
pub fn empirical_error_sweep<A, B>(
    null_pool: &[Vec<f64>],
    alt_pool: &[Vec<f64>],
    null_model: &A,
    alt_model: &B,
    cfg: &SweepConfig,
    run: usize,
    theoretical: Option<TheoreticalExponents>,
) -> Result<ErrorSweepTable>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    cfg.validate()?;
    if null_pool.is_empty() || alt_pool.is_empty() {
        return Err(Error::Input("empirical_error_sweep: empty pool".into()));
    }
    let null_stats = score_differences(null_model, alt_model, null_pool, cfg.exec)?;
    let alt_stats = score_differences(null_model, alt_model, alt_pool, cfg.exec)?;
    let theo = match theoretical {
        Some(t) => t,
        None => TheoreticalExponents::from_pools(&null_stats, &alt_stats, cfg.threshold, cfg.exec)?,
    };

    let trial_mean = |side: u64, n: usize, trial: usize| -> Result<f64> {
        let mut r = rng::substream(cfg.seed, &[run as u64, n as u64, trial as u64, side]);
        let (pool, stats) = if side == SIDE_NULL { (null_pool, &null_stats) } else { (alt_pool, &alt_stats) };
        let mut total = 0.0;
        for _ in 0..n {
            let k = r.random_range(0..pool.len());
            total += if cfg.cache_scores {
                stats[k]
            } else {
                score_difference(null_model, alt_model, &pool[k])?
            };
        }
        Ok(total / n as f64)
    };

    let trials = cfg.trials_per_n;
    let floor = 1.0 / (trials as f64 + 1.0);
    let mut table = ErrorSweepTable::new(floor);
    for &n in &cfg.n_list {
        let outcomes = par::map_indexed(cfg.exec, trials, |t| -> Result<(bool, bool)> {
            let false_alarm = trial_mean(SIDE_NULL, n, t)? > cfg.threshold;
            let miss = trial_mean(SIDE_ALT, n, t)? <= cfg.threshold;
            Ok((false_alarm, miss))
        });
        let (mut fa, mut miss) = (0usize, 0usize);
        for o in outcomes {
            let (a, b) = o?;
            fa += usize::from(a);
            miss += usize::from(b);
        }
        let alpha = (fa as f64 + 1.0) / (trials as f64 + 1.0);
        let beta = (miss as f64 + 1.0) / (trials as f64 + 1.0);
        table.rows.push(ErrorSweepRow {
            run,
            n,
            alpha,
            beta,
            emp_exp1: alpha.ln() / n as f64,
            emp_exp2: beta.ln() / n as f64,
            theo_exp1: -theo.type1,
            theo_exp2: -theo.type2,
        });
    }
    Ok(table)
}

/// Type-II errors of HST and LRT at matched empirical type-I error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeymanPearsonComparison {
    pub n: usize,
    pub alpha_hst: f64,
    pub alpha_lrt: f64,
    pub beta_hst: f64,
    pub beta_lrt: f64,
    /// sqrt(β_hst(1−β_hst)/trials + β_lrt(1−β_lrt)/trials)
    pub pooled_se: f64,
}

fn upper_tail_threshold(mut null_means: Vec<f64>, alpha: f64) -> f64 {
    null_means.sort_by(f64::total_cmp);
    let exceed = ((alpha * null_means.len() as f64).floor() as usize).min(null_means.len() - 1);
    null_means[null_means.len() - 1 - exceed]
}

/// For each trial, the same resampled indices feed both tests; each test's
/// threshold is the empirical (1 − α) quantile of its own null trial statistics.
#[allow(clippy::too_many_arguments)]
pub fn neyman_pearson_comparison<A, B>(
    null_pool: &[Vec<f64>],
    alt_pool: &[Vec<f64>],
    null_model: &A,
    alt_model: &B,
    n: usize,
    trials: usize,
    alpha_target: f64,
    seed: u64,
    exec: Execution,
) -> Result<NeymanPearsonComparison>
where
    A: ScoreModel + ?Sized,
    B: ScoreModel + ?Sized,
{
    if n == 0 || trials == 0 || null_pool.is_empty() || alt_pool.is_empty() {
        return Err(Error::Input("neyman_pearson_comparison: empty configuration".into()));
    }
    let per_point = |pool: &[Vec<f64>]| -> Result<Vec<(f64, f64)>> {
        par::map_slice(exec, pool, |x| {
            Ok((score_difference(null_model, alt_model, x)?, log_likelihood_ratio(null_model, alt_model, x)?))
        })
        .into_iter()
        .collect()
    };
    let null_pp = per_point(null_pool)?;
    let alt_pp = per_point(alt_pool)?;
    let trial_means = |pp: &[(f64, f64)], side: u64| -> Vec<(f64, f64)> {
        par::map_indexed(exec, trials, |t| {
            let mut r = rng::substream(seed, &[n as u64, t as u64, side]);
            let (mut h, mut l) = (0.0, 0.0);
            for _ in 0..n {
                let (dh, dl) = pp[r.random_range(0..pp.len())];
                h += dh;
                l += dl;
            }
            (h / n as f64, l / n as f64)
        })
    };
    let null_tm = trial_means(&null_pp, SIDE_NULL);
    let alt_tm = trial_means(&alt_pp, SIDE_ALT);
    let t_hst = upper_tail_threshold(null_tm.iter().map(|p| p.0).collect(), alpha_target);
    let t_lrt = upper_tail_threshold(null_tm.iter().map(|p| p.1).collect(), alpha_target);
    let frac = |it: &mut dyn Iterator<Item = bool>| it.filter(|b| *b).count() as f64 / trials as f64;
    let alpha_hst = frac(&mut null_tm.iter().map(|p| p.0 > t_hst));
    let alpha_lrt = frac(&mut null_tm.iter().map(|p| p.1 > t_lrt));
    let beta_hst = frac(&mut alt_tm.iter().map(|p| p.0 <= t_hst));
    let beta_lrt = frac(&mut alt_tm.iter().map(|p| p.1 <= t_lrt));
    let tn = trials as f64;
    Ok(NeymanPearsonComparison {
        n,
        alpha_hst,
        alpha_lrt,
        beta_hst,
        beta_lrt,
        pooled_se: (beta_hst * (1.0 - beta_hst) / tn + beta_lrt * (1.0 - beta_lrt) / tn).sqrt(),
    })
}
