use std::time::Instant;

use super::{skill_differences, Method, SkillMeasure, ViEstimate};
use crate::data::{dropout_transform, Split};
use crate::error::Result;
use crate::network::{train, MlpModel, TrainOptions};

/// Fits a fresh network of the same architecture on the imputed training
/// data and compares it, on the imputed test set, with `full` on the
/// original test set. The fresh initialisation uses `opts.seed.derive(j)`.
pub fn vi_retrain(
    full: &MlpModel,
    split: &Split,
    j: usize,
    m: SkillMeasure,
    opts: &TrainOptions,
    alpha: f64,
) -> Result<ViEstimate> {
    let started = Instant::now();
    let train_j = dropout_transform(&split.train, j)?;
    let test_j = dropout_transform(&split.test, j)?;
    let init = MlpModel::init(full.config.clone(), opts.seed.derive(j as u64))?;
    let reduced_model = train(&init, &train_j, opts)?;
    let base = full.predict(split.test.x())?;
    let reduced = reduced_model.predict(test_j.x())?;
    let terms = skill_differences(m, split.test.y(), base.view(), reduced.view());
    ViEstimate::from_terms(j, Method::Retrain, terms, alpha, started, None)
}
