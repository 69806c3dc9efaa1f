//! Experiment configuration file and its resolution against CLI flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scoretest::models::ModelSpec;
use scoretest::testing::{default_n_list, ThresholdPolicy};

use crate::args::GlobalArgs;
use crate::CliError;

/// A model given inline or as a path to a model JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(ModelSpec),
    Path(PathBuf),
}

impl ModelSource {
    fn resolve(&self, base: &Path) -> Result<ModelSpec, CliError> {
        match self {
            ModelSource::Inline(s) => Ok(s.clone()),
            ModelSource::Path(p) => Ok(ModelSpec::load(base.join(p))?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Exact for Gaussian, Gibbs for RBM, MALA otherwise.
    #[default]
    Auto,
    Exact,
    Mala,
    Hmc,
    Gibbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub chains: usize,
    /// Tuned by a pre-run when absent.
    pub step_size: Option<f64>,
    pub leapfrog_steps: usize,
    /// Kernel default when absent (5000 MALA/HMC iterations, 1000 Gibbs sweeps).
    pub burn_in: Option<usize>,
    pub thinning: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Auto,
            chains: 4,
            step_size: None,
            leapfrog_steps: 10,
            burn_in: None,
            thinning: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub n_list: Vec<usize>,
    pub trials_per_n: usize,
    pub pool_size: usize,
    pub runs: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            n_list: default_n_list(),
            trials_per_n: 10_000,
            pool_size: 10_000,
            runs: 10,
        }
    }
}

/// Fixed sample pools read from CSV instead of drawn from the models.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPools {
    pub null_csv: Option<PathBuf>,
    pub alt_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub data_csv: Option<PathBuf>,
    pub d_h: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_n: Option<usize>,
    /// Cold start from this model; small random weights otherwise.
    pub init: Option<ModelSource>,
    pub freeze_weights: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            data_csv: None,
            d_h: 40,
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            train_n: None,
            init: None,
            freeze_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub null: Option<ModelSource>,
    #[serde(default)]
    pub alternative: Option<ModelSource>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default = "default_policy")]
    pub threshold_policy: String,
    /// Samples per hypothesis for exponent estimation.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataPools,
    #[serde(default)]
    pub train: TrainSettings,
}

fn default_policy() -> String {
    "midpoint".into()
}

fn default_m() -> usize {
    100_000
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            null: None,
            alternative: None,
            sampler: SamplerConfig::default(),
            sweep: SweepSettings::default(),
            threshold_policy: default_policy(),
            m: default_m(),
            seed: 0,
            data: DataPools::default(),
            train: TrainSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Read the config (if any), apply flag overrides, inline model files and
    /// make data paths absolute relative to the config's directory.
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let (mut cfg, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let cfg: ExperimentConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (cfg, base)
            }
            None => (ExperimentConfig::default(), PathBuf::new()),
        };
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(p) = &args.threshold_policy {
            cfg.threshold_policy = p.clone();
        }
        if let Some(n) = &args.n_list {
            cfg.sweep.n_list = n.clone();
        }
        if let Some(t) = args.trials {
            cfg.sweep.trials_per_n = t;
        }
        if let Some(p) = args.pool_size {
            cfg.sweep.pool_size = p;
        }
        if let Some(r) = args.runs {
            cfg.sweep.runs = r;
        }
        if let Some(n) = args.train_n {
            cfg.train.train_n = Some(n);
        }
        for m in [&mut cfg.null, &mut cfg.alternative, &mut cfg.train.init].into_iter().flatten() {
            *m = ModelSource::Inline(m.resolve(&base)?);
        }
        for p in [&mut cfg.data.null_csv, &mut cfg.data.alt_csv, &mut cfg.train.data_csv].into_iter().flatten() {
            *p = base.join(&*p);
        }
        cfg.policy()?;
        if cfg.sampler.chains == 0 || cfg.sampler.thinning == 0 || cfg.sampler.leapfrog_steps == 0 {
            return Err(CliError::Usage("sampler chains, thinning and leapfrog_steps must be ≥ 1".into()));
        }
        if cfg.m == 0 {
            return Err(CliError::Usage("m must be ≥ 1".into()));
        }
        Ok(cfg)
    }

    pub fn policy(&self) -> Result<ThresholdPolicy, CliError> {
        Ok(self.threshold_policy.parse()?)
    }

    pub fn null_spec(&self) -> Result<&ModelSpec, CliError> {
        inline(self.null.as_ref(), "null")
    }

    pub fn alt_spec(&self) -> Result<&ModelSpec, CliError> {
        inline(self.alternative.as_ref(), "alternative")
    }
}

fn inline<'a>(m: Option<&'a ModelSource>, role: &str) -> Result<&'a ModelSpec, CliError> {
    match m {
        Some(ModelSource::Inline(s)) => Ok(s),
        Some(ModelSource::Path(p)) => Err(CliError::Usage(format!("{role} model {} was not resolved", p.display()))),
        None => Err(CliError::Usage(format!("config has no {role} model"))),
    }
}
