//! Fully connected ReLU regression networks with exact gradients with
//! respect to parameters and inputs.
//!
//! # Parameter layout
//!
//! The flat parameter vector is layer-major. For each layer (input side
//! first) it holds the weight matrix of shape `(out, in)` in row-major order
//! followed by the `out` biases. A network with `p` inputs and hidden widths
//! `[m]` therefore has `p*m + m + m + 1` parameters, and a correction `dtheta`
//! computed on gradient features can be added to `theta` coordinate-wise.

mod mlp;
mod ntk;
mod tangent;
mod train;

pub use mlp::{Activation, LayerShape, MlpModel, NetworkConfig};
pub use ntk::{ntk_matrix, ntk_trace, trace_linear_fit, TraceFit};
pub use tangent::TangentFeatures;
pub use train::{train, train_with_trace, Optimizer, TrainOptions};
