//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use lazyvi::data::{split, Dataset, Split};
use lazyvi::network::{train, MlpModel, NetworkConfig, TrainOptions};
use lazyvi::numerics::RngSeed;

/// Full-batch Adam budget used for the small regression designs.
pub fn small_budget(seed: RngSeed) -> TrainOptions {
    TrainOptions {
        epochs: 500,
        learning_rate: 1e-2,
        seed,
        ..TrainOptions::default()
    }
}

/// Splits `d` with `n1` training rows and trains a fresh network on the
/// training part. Split, initialisation and retraining draw from distinct
/// streams of `seed`.
pub fn fit(d: &Dataset, n1: usize, hidden: Vec<usize>, opts: &TrainOptions, seed: RngSeed) -> (MlpModel, Split) {
    let parts = split(d, n1, seed.derive(0)).expect("valid split");
    let init = MlpModel::init(NetworkConfig::new(d.p(), hidden), seed.derive(1)).expect("valid network");
    let full = train(&init, &parts.train, opts).expect("training succeeds");
    (full, parts)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean.
pub fn std_error(values: &[f64]) -> f64 {
    let m = mean(values);
    let k = values.len() as f64;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
}
