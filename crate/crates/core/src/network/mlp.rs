use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngSeed, Vector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

fn one() -> usize {
    1
}

/// Architecture of a single-output ReLU network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    /// Widths of the hidden layers; empty gives an affine model.
    pub hidden_widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "one")]
    pub output_dim: usize,
}

/// Position of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Self {
        Self {
            input_dim,
            hidden_widths,
            activation: Activation::Relu,
            output_dim: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidArgument("input_dim must be at least 1".into()));
        }
        if self.hidden_widths.contains(&0) {
            return Err(Error::InvalidArgument("hidden widths must be at least 1".into()));
        }
        if self.output_dim != 1 {
            return Err(Error::InvalidArgument(format!(
                "only single-output networks are supported, got output_dim = {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_widths);
        dims.push(1);
        let mut offset = 0;
        dims.windows(2)
            .map(|w| {
                let shape = LayerShape {
                    inputs: w[0],
                    outputs: w[1],
                    weight_offset: offset,
                    bias_offset: offset + w[0] * w[1],
                };
                offset += (w[0] + 1) * w[1];
                shape
            })
            .collect()
    }

    /// Total parameter count `sum (in + 1) * out`.
    pub fn num_params(&self) -> usize {
        self.layers().iter().map(|l| (l.inputs + 1) * l.outputs).sum()
    }
}

/// A network together with its flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: NetworkConfig,
    pub theta: Vec<f64>,
}

/// Intermediate values of a batched forward pass.
pub(crate) struct ForwardCache {
    /// `activations[0]` is the input batch, then one entry per hidden layer.
    pub activations: Vec<Matrix>,
    /// Hidden-layer pre-activations.
    pub pre: Vec<Matrix>,
    pub output: Vector,
}

impl MlpModel {
    /// Fan-in scaled Gaussian initialisation: hidden weights `N(0, 2/in)`,
    /// output weights `N(0, 1/in)`, biases zero.
    pub fn init(config: NetworkConfig, seed: RngSeed) -> Result<Self> {
        config.validate()?;
        let mut rng = seed.rng();
        let mut theta = vec![0.0; config.num_params()];
        let layers = config.layers();
        let last = layers.len() - 1;
        for (idx, layer) in layers.iter().enumerate() {
            let gain = if idx == last { 1.0 } else { 2.0 };
            let sd = (gain / layer.inputs as f64).sqrt();
            let end = layer.weight_offset + layer.inputs * layer.outputs;
            for w in &mut theta[layer.weight_offset..end] {
                let z: f64 = rng.sample(StandardNormal);
                *w = sd * z;
            }
        }
        Ok(Self { config, theta })
    }

    pub fn from_parts(config: NetworkConfig, theta: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let m = config.num_params();
        if theta.len() != m {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: m,
                got: theta.len(),
            });
        }
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteInput("network parameters"));
        }
        Ok(Self { config, theta })
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    /// Parameters shifted by `delta`.
    pub fn shifted(&self, delta: ArrayView1<'_, f64>) -> Result<Self> {
        if delta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                what: "parameter correction",
                expected: self.theta.len(),
                got: delta.len(),
            });
        }
        let theta = self.theta.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
        Ok(Self {
            config: self.config.clone(),
            theta,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: MlpModel = serde_json::from_str(text)?;
        Self::from_parts(model.config, model.theta)
    }

    pub(crate) fn weights(&self, layer: &LayerShape) -> ArrayView2<'_, f64> {
        let end = layer.weight_offset + layer.inputs * layer.outputs;
        ArrayView2::from_shape((layer.outputs, layer.inputs), &self.theta[layer.weight_offset..end])
            .expect("layer shape matches parameter slice")
    }

    pub(crate) fn biases(&self, layer: &LayerShape) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.theta[layer.bias_offset..layer.bias_offset + layer.outputs])
    }

    pub(crate) fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                what: "input features",
                expected: self.config.input_dim,
                got: cols,
            });
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, x: ArrayView2<'_, f64>) -> ForwardCache {
        let layers = self.config.layers();
        let last = layers.len() - 1;
        let mut activations = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(last);
        activations.push(x.to_owned());
        for layer in &layers[..last] {
            let a = activations.last().expect("input pushed");
            let mut z = a.dot(&self.weights(layer).t());
            z += &self.biases(layer);
            let h = z.mapv(|v| v.max(0.0));
            pre.push(z);
            activations.push(h);
        }
        let out_layer = &layers[last];
        let a = activations.last().expect("input pushed");
        let w = self.weights(out_layer);
        let b = self.theta[out_layer.bias_offset];
        let output = a.dot(&w.row(0)) + b;
        ForwardCache {
            activations,
            pre,
            output,
        }
    }

    /// Outputs for every row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vector> {
        self.check_input(x.ncols())?;
        Ok(self.forward_cached(x).output)
    }

    pub fn forward(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_input(x.len())?;
        let batch = x.insert_axis(Axis(0));
        Ok(self.forward_cached(batch).output[0])
    }

    /// Propagates per-sample output sensitivities `delta` (shape `n x out`)
    /// from layer `idx` to the layer below.
    pub(crate) fn backprop_delta(&self, layer: &LayerShape, delta: &Matrix, pre_below: &Matrix) -> Matrix {
        let mut d = delta.dot(&self.weights(layer));
        ndarray::Zip::from(&mut d).and(pre_below).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
        d
    }

    /// Gradient-feature matrix: row `i` is the gradient of the output at
    /// `x[i]` with respect to the flat parameters. ReLU subgradient at zero
    /// is zero.
    pub fn param_gradients(&self, x: ArrayView2<'_, f64>) -> Result<Matrix> {
        Ok(self.tangent_features(x)?.dense())
    }

    pub fn param_gradient(&self, x: ArrayView1<'_, f64>) -> Result<Vector> {
        let phi = self.param_gradients(x.insert_axis(Axis(0)))?;
        Ok(phi.row(0).to_owned())
    }

    /// Gradients of the output with respect to the inputs, one row per sample.
    pub fn input_gradients(&self, x: ArrayView2<'_, f64>) -> Result<Matrix> {
        self.check_input(x.ncols())?;
        let n = x.nrows();
        let cache = self.forward_cached(x);
        let layers = self.config.layers();
        let mut delta = Matrix::ones((n, 1));
        for idx in (1..layers.len()).rev() {
            delta = self.backprop_delta(&layers[idx], &delta, &cache.pre[idx - 1]);
        }
        Ok(delta.dot(&self.weights(&layers[0])))
    }

    pub fn input_gradient(&self, x: ArrayView1<'_, f64>) -> Result<Vector> {
        let g = self.input_gradients(x.insert_axis(Axis(0)))?;
        Ok(g.row(0).to_owned())
    }

    /// Mean squared error and its gradient with respect to `theta`.
    pub(crate) fn mse_and_gradient(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> (f64, Vec<f64>) {
        let n = x.nrows() as f64;
        let cache = self.forward_cached(x);
        let resid = &cache.output - &y;
        let loss = resid.dot(&resid) / n;
        let layers = self.config.layers();
        let mut grad = vec![0.0; self.num_params()];
        let mut delta = (resid * (2.0 / n)).insert_axis(Axis(1));
        for idx in (0..layers.len()).rev() {
            let layer = &layers[idx];
            let gw = delta.t().dot(&cache.activations[idx]);
            let gb = delta.sum_axis(Axis(0));
            let wend = layer.weight_offset + layer.inputs * layer.outputs;
            for (g, v) in grad[layer.weight_offset..wend].iter_mut().zip(gw.iter()) {
                *g = *v;
            }
            for (g, v) in grad[layer.bias_offset..layer.bias_offset + layer.outputs]
                .iter_mut()
                .zip(gb.iter())
            {
                *g = *v;
            }
            if idx > 0 {
                delta = self.backprop_delta(layer, &delta, &cache.pre[idx - 1]);
            }
        }
        (loss, grad)
    }

    pub fn mse(&self, x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        let pred = self.predict(x)?;
        let r = pred - y;
        Ok(r.dot(&r) / y.len() as f64)
    }
}
