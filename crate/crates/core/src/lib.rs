//! Variable importance for feedforward ReLU networks.
//!
//! Three estimators of how much predictive skill a network loses when a
//! feature is replaced by its training mean:
//!
//! * **dropout** feeds the imputed features to the unchanged network;
//! * **retrain** fits a fresh network on the imputed data;
//! * **lazy** linearises the trained network in its parameters and fits a
//!   ridge correction on the gradient features, a kernel ridge regression in
//!   the network's tangent kernel.
//!
//! Each estimate carries a plug-in standard error and a Wald interval.
//! Shapley values and remove-and-retrain curves are built on the same
//! machinery, and [`analytic`] holds closed-form values for linear truths.
//!
//! ```
//! use lazyvi::data::{gen_linear_corr, split};
//! use lazyvi::estimators::{vi_dropout, SkillMeasure};
//! use lazyvi::network::{train, MlpModel, NetworkConfig, TrainOptions};
//! use lazyvi::numerics::RngSeed;
//!
//! let data = gen_linear_corr(200, 0.5, RngSeed(1))?;
//! let parts = split(&data, 150, RngSeed(2))?;
//! let init = MlpModel::init(NetworkConfig::new(6, vec![16]), RngSeed(3))?;
//! let opts = TrainOptions { epochs: 50, ..TrainOptions::default() };
//! let full = train(&init, &parts.train, &opts)?;
//! let est = vi_dropout(&full, &parts, 0, SkillMeasure::NegMse, 0.05)?;
//! assert!(est.ci.0 <= est.vi_hat && est.vi_hat <= est.ci.1);
//! # Ok::<(), lazyvi::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod data;
mod error;
pub mod estimators;
pub mod network;
pub mod numerics;
pub mod par;
pub mod roar;
pub mod shapley;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod test_support;
