use serde::{Deserialize, Serialize};

use super::MlpModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::RngSeed;

/// Full-batch optimiser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam {
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    /// Gradient descent with heavy-ball momentum; `momentum = 0` is plain descent.
    Momentum {
        momentum: f64,
    },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Self::adam()
    }
}

fn default_lr() -> f64 {
    1e-2
}

fn default_epochs() -> usize {
    500
}

/// Training knobs. `seed` drives the initialisation of freshly built models
/// (retraining); full-batch updates themselves are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: RngSeed,
    #[serde(default)]
    pub early_stop_steps: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::default(),
            learning_rate: default_lr(),
            epochs: default_epochs(),
            seed: RngSeed(0),
            early_stop_steps: None,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = if self.early_stop_steps.is_some() {
            self.learning_rate >= 0.0
        } else {
            self.learning_rate > 0.0
        };
        if !lr_ok || !self.learning_rate.is_finite() {
            return Err(Error::OutOfRange {
                what: "learning rate",
                value: self.learning_rate,
            });
        }
        if self.early_stop_steps.is_none() && self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Minimises the training MSE starting from `model`.
pub fn train(model: &MlpModel, data: &Dataset, opts: &TrainOptions) -> Result<MlpModel> {
    train_with_trace(model, data, opts).map(|(m, _)| m)
}

/// Like [`train`], also returning the loss before every update and the
/// final loss.
///
/// A full run returns the lowest-loss parameters seen, so the result never
/// has a larger training MSE than the starting point. With
/// `early_stop_steps = Some(k)` exactly `k` updates are applied and the last
/// iterate is returned.
pub fn train_with_trace(model: &MlpModel, data: &Dataset, opts: &TrainOptions) -> Result<(MlpModel, Vec<f64>)> {
    opts.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.p() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset features vs network inputs",
            expected: model.input_dim(),
            got: data.p(),
        });
    }
    let x = data.x();
    let y = data.y();
    let steps = opts.early_stop_steps.unwrap_or(opts.epochs);
    let keep_best = opts.early_stop_steps.is_none();
    let m = model.num_params();
    let lr = opts.learning_rate;

    let mut current = model.clone();
    let mut first = vec![0.0; m];
    let mut second = vec![0.0; m];
    let mut trace = Vec::with_capacity(steps + 1);
    let mut best: Option<(f64, Vec<f64>)> = None;

    for step in 0..steps {
        let (loss, grad) = current.mse_and_gradient(x, y);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        trace.push(loss);
        if keep_best && best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, current.theta.clone()));
        }
        match opts.optimizer {
            Optimizer::Adam { beta1, beta2, eps } => {
                let t = (step + 1) as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for k in 0..m {
                    let g = grad[k];
                    first[k] = beta1 * first[k] + (1.0 - beta1) * g;
                    second[k] = beta2 * second[k] + (1.0 - beta2) * g * g;
                    let mhat = first[k] / c1;
                    let vhat = second[k] / c2;
                    current.theta[k] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
            Optimizer::Momentum { momentum } => {
                for k in 0..m {
                    first[k] = momentum * first[k] + grad[k];
                    current.theta[k] -= lr * first[k];
                }
            }
        }
    }
    let final_loss = current.mse(x, y)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: steps });
    }
    trace.push(final_loss);
    if keep_best {
        if let Some((b, theta)) = best {
            if b < final_loss {
                current.theta = theta;
            }
        }
    }
    Ok((current, trace))
}
