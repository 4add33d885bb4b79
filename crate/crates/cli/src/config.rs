use std::fmt;
use std::path::{Path, PathBuf};

use lazyvi::estimators::{EarlyStop, LazyConfig, Method, SkillMeasure};
use lazyvi::network::TrainOptions;
use lazyvi::roar::OrderingSource;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "VI_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "vi-output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    LinearCorr,
    Binary,
    Highdim,
    CsvVi,
    Shapley,
    Roar,
    TraceCheck,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::LinearCorr => "linear_corr",
            Experiment::Binary => "binary",
            Experiment::Highdim => "highdim",
            Experiment::CsvVi => "csv_vi",
            Experiment::Shapley => "shapley",
            Experiment::Roar => "roar",
            Experiment::TraceCheck => "trace_check",
        }
    }

    fn needs_size(self) -> bool {
        self != Experiment::CsvVi
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Hidden layer layout; the input width always comes from the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub hidden_widths: Vec<usize>,
    /// Optional check against the data's feature count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dim: Option<usize>,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self {
            hidden_widths: vec![50],
            input_dim: None,
        }
    }
}

/// How Shapley coalitions are refitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoalitionFit {
    #[default]
    Lazy,
    Retrain,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_methods() -> Vec<Method> {
    vec![Method::Dropout, Method::Lazy, Method::Retrain]
}

fn default_alpha() -> f64 {
    0.05
}

fn default_sigma_w() -> f64 {
    0.3
}

fn default_orderings() -> Vec<OrderingSource> {
    vec![OrderingSource::Grad, OrderingSource::Random]
}

fn default_trace_sizes() -> Vec<usize> {
    vec![300, 600, 900, 1200]
}

/// One experiment run, read from JSON. Absent optional fields take the
/// defaults documented on each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// One run per seed; for `binary` every seed is one simulation.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n1: Option<usize>,
    /// Correlation grid for `linear_corr` (default 0, .2, .4, .6, .8).
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub network: NetworkSpec,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default)]
    pub lazy: LazyConfig,
    /// Schedule of the `lazy_es` method; required when it is requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<EarlyStop>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// One-based variables to score; all when absent.
    #[serde(default)]
    pub features: Option<Vec<usize>>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Skill measure; `binary` defaults to accuracy, everything else to
    /// negative MSE.
    #[serde(default)]
    pub measure: Option<SkillMeasure>,
    /// `csv_vi` input file and response column.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub response: Option<String>,
    /// Teacher weight spread for `highdim` and `roar`.
    #[serde(default = "default_sigma_w")]
    pub sigma_w: f64,
    /// Removal proportions for `roar`.
    #[serde(default)]
    pub proportions: Option<Vec<f64>>,
    #[serde(default = "default_orderings")]
    pub orderings: Vec<OrderingSource>,
    /// Sampled orderings for `shapley`; exact enumeration when absent.
    #[serde(default)]
    pub permutations: Option<usize>,
    #[serde(default)]
    pub coalition: CoalitionFit,
    #[serde(default = "default_trace_sizes")]
    pub trace_sizes: Vec<usize>,
}

impl RunConfig {
    /// Defaults for `experiment` with every other field at its default.
    pub fn new(experiment: Experiment) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("defaults deserialize")
    }

    /// Defaults used by the dedicated subcommands, sized for a desk run.
    pub fn preset(experiment: Experiment) -> Self {
        let mut cfg = Self::new(experiment);
        if experiment.needs_size() {
            cfg.n = Some(1000);
            cfg.n1 = Some(667);
        }
        match experiment {
            Experiment::LinearCorr => cfg.seeds = (0..10).collect(),
            Experiment::Binary => cfg.seeds = (0..100).collect(),
            Experiment::Roar => {
                cfg.seeds = (0..5).collect();
                cfg.train.epochs = 200;
                cfg.train.learning_rate = 1.5e-3;
                cfg.lazy.lambda_grid = Some(vec![1.0, 1e2, 1e4]);
            }
            Experiment::TraceCheck => cfg.network.hidden_widths = vec![128],
            Experiment::Shapley => {
                cfg.n = Some(750);
                cfg.n1 = Some(500);
                cfg.network.hidden_widths = vec![128];
                cfg.lazy = LazyConfig::fixed(1.0);
                cfg.permutations = Some(10);
            }
            Experiment::Highdim | Experiment::CsvVi => {}
        }
        cfg
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks cross-field requirements; messages name the offending field.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.seeds.is_empty() {
            return bad("`seeds` must list at least one seed".into());
        }
        if self.experiment.needs_size() {
            let Some(n) = self.n else {
                return bad(format!("missing field `n` for experiment `{}`", self.experiment));
            };
            let Some(n1) = self.n1 else {
                return bad(format!("missing field `n1` for experiment `{}`", self.experiment));
            };
            if n1 == 0 || n1 >= n {
                return bad(format!("`n1` must satisfy 0 < n1 < n (got n1 = {n1}, n = {n})"));
            }
        } else {
            if self.data.is_none() {
                return bad("missing field `data` for experiment `csv_vi`".into());
            }
            if self.response.is_none() {
                return bad("missing field `response` for experiment `csv_vi`".into());
            }
        }
        if self.methods.is_empty() {
            return bad("`methods` must list at least one method".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("`alpha` must lie in (0, 1), got {}", self.alpha));
        }
        if self.methods.contains(&Method::LazyEs) && self.early_stop.is_none() {
            return bad("missing field `early_stop` for method `lazy_es`".into());
        }
        if let Some(rho) = &self.rho {
            if let Some(r) = rho.iter().find(|r| !(r.abs() < 1.0)) {
                return bad(format!("`rho` values must lie in (-1, 1), got {r}"));
            }
        }
        if let Some(f) = &self.features {
            if f.contains(&0) {
                return bad("`features` are one-based".into());
            }
        }
        if self.experiment == Experiment::Roar {
            if self.methods.contains(&Method::LazyEs) {
                return bad("`methods` for `roar` cannot include lazy_es".into());
            }
            if self.orderings.contains(&OrderingSource::Given) {
                return bad("`orderings` for `roar` must be grad or random".into());
            }
        }
        match (self.experiment, self.measure()) {
            (Experiment::LinearCorr, SkillMeasure::NegMse) | (Experiment::Binary, SkillMeasure::Accuracy) => {}
            (Experiment::LinearCorr | Experiment::Binary, m) => {
                return bad(format!(
                    "`measure` {} has no closed-form truth for experiment `{}`",
                    serde_json::to_value(m).expect("measure serializes"),
                    self.experiment
                ));
            }
            _ => {}
        }
        if self.experiment == Experiment::TraceCheck && self.trace_sizes.len() < 2 {
            return bad("`trace_sizes` needs at least two sizes".into());
        }
        self.train
            .validate()
            .map_err(|e| CliError::Config(format!("`train`: {e}")))?;
        Ok(())
    }

    pub fn measure(&self) -> SkillMeasure {
        self.measure.unwrap_or(match self.experiment {
            Experiment::Binary => SkillMeasure::Accuracy,
            _ => SkillMeasure::NegMse,
        })
    }

    /// Flag, then config, then the environment, then `vi-output`.
    pub fn resolve_output_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Command-line overrides of config fields. The output directory flag is
/// resolved separately so that it does not change the config hash.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub n: Option<usize>,
    pub n1: Option<usize>,
    pub rho: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(e) = self.experiment {
            cfg.experiment = e;
        }
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if let Some(n1) = self.n1 {
            cfg.n1 = Some(n1);
        }
        if let Some(rho) = &self.rho {
            cfg.rho = Some(rho.clone());
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
    }
}
