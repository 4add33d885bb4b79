use std::time::Instant;

use super::{skill_differences, Method, SkillMeasure, ViEstimate};
use crate::data::{dropout_transform, Split};
use crate::error::Result;
use crate::network::MlpModel;

/// Plug-in estimate: the full network evaluated on the imputed test set.
pub fn vi_dropout(full: &MlpModel, split: &Split, j: usize, m: SkillMeasure, alpha: f64) -> Result<ViEstimate> {
    let started = Instant::now();
    let test_j = dropout_transform(&split.test, j)?;
    let base = full.predict(split.test.x())?;
    let reduced = full.predict(test_j.x())?;
    let terms = skill_differences(m, split.test.y(), base.view(), reduced.view());
    ViEstimate::from_terms(j, Method::Dropout, terms, alpha, started, None)
}
