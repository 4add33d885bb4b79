//! Variable-importance estimators, skill measures, plug-in standard errors
//! and Wald intervals.
//!
//! Every estimator reports `vi_hat = mean(t)` over the test rows, where
//! `t_i` is the skill of the full network on row `i` minus the skill of the
//! reduced model on the imputed row, and `tau_hat = sqrt(var(t) / n2)`.

mod dropout;
mod lazy;
mod report;
mod retrain;
mod skill;
mod wald;

pub use dropout::vi_dropout;
pub use lazy::{cv_lambda, lazy_refit, vi_lazy, vi_lazy_es, EarlyStop, LazyConfig, DEFAULT_GRID_MULTIPLIERS};
pub use report::{write_estimates_csv, Method, ViEstimate};
pub use retrain::vi_retrain;
pub use skill::{eval_skill, skill_differences, Predict, PredictFn, SkillMeasure};
pub use wald::wald_ci;

use crate::data::Split;
use crate::error::Result;
use crate::network::{MlpModel, TrainOptions};
use crate::par::{try_map_indexed, Execution};

/// An estimator together with its settings.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Dropout { alpha: f64 },
    Retrain { opts: TrainOptions, alpha: f64 },
    Lazy(LazyConfig),
    LazyEs { schedule: EarlyStop, alpha: f64 },
}

impl EstimatorSpec {
    pub fn method(&self) -> Method {
        match self {
            EstimatorSpec::Dropout { .. } => Method::Dropout,
            EstimatorSpec::Retrain { .. } => Method::Retrain,
            EstimatorSpec::Lazy(_) => Method::Lazy,
            EstimatorSpec::LazyEs { .. } => Method::LazyEs,
        }
    }
}

pub fn estimate(full: &MlpModel, split: &Split, j: usize, m: SkillMeasure, spec: &EstimatorSpec) -> Result<ViEstimate> {
    match spec {
        EstimatorSpec::Dropout { alpha } => vi_dropout(full, split, j, m, *alpha),
        EstimatorSpec::Retrain { opts, alpha } => vi_retrain(full, split, j, m, opts, *alpha),
        EstimatorSpec::Lazy(cfg) => vi_lazy(full, split, j, m, cfg),
        EstimatorSpec::LazyEs { schedule, alpha } => vi_lazy_es(full, split, j, m, schedule, *alpha),
    }
}

/// Estimates for the listed features, in the order given.
pub fn estimate_many(
    full: &MlpModel,
    split: &Split,
    features: &[usize],
    m: SkillMeasure,
    spec: &EstimatorSpec,
    exec: Execution,
) -> Result<Vec<ViEstimate>> {
    try_map_indexed(exec, features.len(), |k| estimate(full, split, features[k], m, spec))
}

/// Estimates for every feature.
pub fn estimate_all(
    full: &MlpModel,
    split: &Split,
    m: SkillMeasure,
    spec: &EstimatorSpec,
    exec: Execution,
) -> Result<Vec<ViEstimate>> {
    let features: Vec<usize> = (0..split.train.p()).collect();
    estimate_many(full, split, &features, m, spec, exec)
}
