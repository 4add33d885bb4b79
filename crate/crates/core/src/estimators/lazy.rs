use std::time::Instant;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{skill_differences, Method, SkillMeasure, ViEstimate};
use crate::data::{dropout_transform, Dataset, Split};
use crate::error::{Error, Result};
use crate::network::TangentFeatures;
use crate::network::{train, MlpModel, Optimizer, TrainOptions};
use crate::numerics::{PartitionedRidge, RngSeed, Vector};

/// Multipliers of the default penalty grid, applied to `sqrt(n1 / 1000)`.
pub const DEFAULT_GRID_MULTIPLIERS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

fn default_folds() -> usize {
    5
}

fn default_alpha() -> f64 {
    0.05
}

/// Settings of the ridge correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LazyConfig {
    /// Candidate penalties. `None` means the default grid scaled to the
    /// training size, see [`LazyConfig::grid_for`].
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Seeds the fold assignment.
    #[serde(default)]
    pub seed: RngSeed,
}

impl Default for LazyConfig {
    fn default() -> Self {
        Self {
            lambda_grid: None,
            cv_folds: default_folds(),
            alpha: default_alpha(),
            seed: RngSeed(0),
        }
    }
}

impl LazyConfig {
    /// A single fixed penalty; cross-validation is skipped.
    pub fn fixed(lambda: f64) -> Self {
        Self {
            lambda_grid: Some(vec![lambda]),
            ..Self::default()
        }
    }

    pub fn grid_for(&self, n1: usize) -> Result<Vec<f64>> {
        let grid = match &self.lambda_grid {
            Some(g) => g.clone(),
            None => {
                let scale = (n1 as f64 / 1000.0).sqrt();
                DEFAULT_GRID_MULTIPLIERS.iter().map(|c| c * scale).collect()
            }
        };
        if grid.is_empty() {
            return Err(Error::InvalidArgument("lambda grid is empty".into()));
        }
        if let Some(&bad) = grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::OutOfRange {
                what: "ridge penalty",
                value: bad,
            });
        }
        Ok(grid)
    }
}

/// Gradient features and dropout residuals of `full` on an imputed
/// training set.
struct Linearization {
    phi: TangentFeatures,
    residual: Vector,
}

impl Linearization {
    fn new(full: &MlpModel, data: &Dataset) -> Result<Self> {
        let phi = full.tangent_features(data.x())?;
        let residual = &data.y() - &full.predict(data.x())?;
        Ok(Self { phi, residual })
    }
}

fn fold_assignment(n: usize, folds: usize, seed: RngSeed) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::BadFoldCount { folds, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng());
    let mut out = vec![Vec::new(); folds];
    for (pos, row) in order.into_iter().enumerate() {
        out[pos % folds].push(row);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn held_out_mse(model: &MlpModel, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, rows: &[usize]) -> Result<f64> {
    let xs = x.select(Axis(0), rows);
    let ys = y.select(Axis(0), rows);
    model.mse(xs.view(), ys.view())
}

fn fit_rows_complement(n: usize, held: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; n];
    for &r in held {
        keep[r] = false;
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// K-fold choice of penalty. For every fold and candidate the correction is
/// fitted on the other folds and the corrected network scored by squared
/// error on the held-out fold; the candidate with the smallest mean error
/// wins, ties going to the larger penalty. Returns the penalty and the
/// correction refitted on all rows.
fn select_and_fit(
    full: &MlpModel,
    data: &Dataset,
    lin: &Linearization,
    grid: &[f64],
    cfg: &LazyConfig,
) -> Result<(f64, Vector)> {
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() == 1 {
        let problem = PartitionedRidge::single(&lin.phi, lin.residual.view())?;
        return Ok((sorted[0], problem.full().solve(sorted[0])?));
    }
    let n = data.n();
    let folds = fold_assignment(n, cfg.cv_folds, cfg.seed)?;
    let problems = PartitionedRidge::new(&lin.phi, lin.residual.view(), folds)?;
    let theta = Vector::from(full.theta.clone());
    let mut totals = vec![0.0; sorted.len()];
    for k in 0..problems.num_parts() {
        let held = problems.part(k);
        let sub = problems.without_part(k);
        debug_assert_eq!(sub.rows(), fit_rows_complement(n, held).as_slice());
        for (total, &lambda) in totals.iter_mut().zip(&sorted) {
            let delta = sub.solve(lambda)?;
            let model = MlpModel {
                config: full.config.clone(),
                theta: (&theta + &delta).to_vec(),
            };
            *total += held_out_mse(&model, data.x(), data.y(), held)?;
        }
    }
    let mut best = 0;
    for (k, total) in totals.iter().enumerate() {
        if *total <= totals[best] {
            best = k;
        }
    }
    let lambda = sorted[best];
    Ok((lambda, problems.full().solve(lambda)?))
}

/// Cross-validated penalty for the correction after imputing feature `j`.
pub fn cv_lambda(full: &MlpModel, train: &Dataset, j: usize, cfg: &LazyConfig) -> Result<f64> {
    let data = dropout_transform(train, j)?;
    let grid = cfg.grid_for(data.n())?;
    let lin = Linearization::new(full, &data)?;
    select_and_fit(full, &data, &lin, &grid, cfg).map(|(lambda, _)| lambda)
}

/// Ridge correction of `full` towards an already imputed training set.
/// Returns the corrected network and the penalty used.
pub fn lazy_refit(full: &MlpModel, imputed_train: &Dataset, cfg: &LazyConfig) -> Result<(MlpModel, f64)> {
    let grid = cfg.grid_for(imputed_train.n())?;
    let lin = Linearization::new(full, imputed_train)?;
    let (lambda, delta) = select_and_fit(full, imputed_train, &lin, &grid, cfg)?;
    Ok((full.shifted(delta.view())?, lambda))
}

/// Lazy estimate: the full network corrected by one ridge step in its
/// tangent features, evaluated on the imputed test set.
pub fn vi_lazy(full: &MlpModel, split: &Split, j: usize, m: SkillMeasure, cfg: &LazyConfig) -> Result<ViEstimate> {
    let started = Instant::now();
    let train_j = dropout_transform(&split.train, j)?;
    let test_j = dropout_transform(&split.test, j)?;
    let (corrected, lambda) = lazy_refit(full, &train_j, cfg)?;
    let base = full.predict(split.test.x())?;
    let reduced = corrected.predict(test_j.x())?;
    let terms = skill_differences(m, split.test.y(), base.view(), reduced.view());
    ViEstimate::from_terms(j, Method::Lazy, terms, cfg.alpha, started, Some(lambda))
}

/// Schedule of the early-stopped variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub steps: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: Optimizer,
}

/// Warm-started retraining from the full parameters for a fixed number of
/// full-batch steps.
pub fn vi_lazy_es(
    full: &MlpModel,
    split: &Split,
    j: usize,
    m: SkillMeasure,
    schedule: &EarlyStop,
    alpha: f64,
) -> Result<ViEstimate> {
    if schedule.steps == 0 {
        return Err(Error::BadSteps);
    }
    let started = Instant::now();
    let train_j = dropout_transform(&split.train, j)?;
    let test_j = dropout_transform(&split.test, j)?;
    let opts = TrainOptions {
        optimizer: schedule.optimizer,
        learning_rate: schedule.learning_rate,
        epochs: schedule.steps,
        seed: RngSeed(0),
        early_stop_steps: Some(schedule.steps),
    };
    let warm = train(full, &train_j, &opts)?;
    let base = full.predict(split.test.x())?;
    let reduced = warm.predict(test_j.x())?;
    let terms = skill_differences(m, split.test.y(), base.view(), reduced.view());
    ViEstimate::from_terms(j, Method::LazyEs, terms, alpha, started, None)
}
