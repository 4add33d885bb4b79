use ndarray::{s, ArrayView1, ArrayView2, Axis};

use super::{LayerShape, MlpModel};
use crate::error::Result;
use crate::numerics::{is_finite, outer_gram, FeatureMatrix, Matrix, Vector};

/// Parameter gradients of a network on a batch, kept in factored form.
///
/// The gradient of the output with respect to the weights of a layer is the
/// outer product of that layer's output sensitivity and its input, so every
/// product ridge needs (`Phi Phi^T`, `Phi^T v`) can be evaluated per layer
/// without materialising the `n x num_params` matrix.
#[derive(Debug, Clone)]
pub struct TangentFeatures {
    layers: Vec<LayerShape>,
    /// Input to each layer, `n x in`.
    inputs: Vec<Matrix>,
    /// Output sensitivity of each layer, `n x out`.
    deltas: Vec<Matrix>,
    num_params: usize,
}

impl MlpModel {
    /// Factored gradient features of the output at every row of `x`.
    pub fn tangent_features(&self, x: ArrayView2<'_, f64>) -> Result<TangentFeatures> {
        self.check_input(x.ncols())?;
        let cache = self.forward_cached(x);
        let layers = self.config.layers();
        let mut deltas = vec![Matrix::ones((x.nrows(), 1))];
        for idx in (1..layers.len()).rev() {
            let below = self.backprop_delta(&layers[idx], deltas.last().expect("seeded"), &cache.pre[idx - 1]);
            deltas.push(below);
        }
        deltas.reverse();
        Ok(TangentFeatures {
            layers,
            inputs: cache.activations,
            deltas,
            num_params: self.num_params(),
        })
    }
}

impl TangentFeatures {
    /// Dense gradient rows, one per sample.
    pub fn dense(&self) -> Matrix {
        let all: Vec<usize> = (0..FeatureMatrix::nrows(self)).collect();
        self.select(&all)
    }

    /// Squared gradient norm of every row, the diagonal of the kernel.
    pub fn squared_norms(&self) -> Vector {
        let mut out = Vector::zeros(FeatureMatrix::nrows(self));
        for (a, d) in self.inputs.iter().zip(&self.deltas) {
            let aa = a.map_axis(Axis(1), |r| r.dot(&r) + 1.0);
            let dd = d.map_axis(Axis(1), |r| r.dot(&r));
            out += &(aa * dd);
        }
        out
    }

    fn select(&self, rows: &[usize]) -> Matrix {
        let mut phi = Matrix::zeros((rows.len(), self.num_params));
        for ((layer, a), d) in self.layers.iter().zip(&self.inputs).zip(&self.deltas) {
            for (out_row, &i) in rows.iter().enumerate() {
                let a_row = a.row(i);
                let d_row = d.row(i);
                let mut row = phi.row_mut(out_row);
                for (o, &dv) in d_row.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    let start = layer.weight_offset + o * layer.inputs;
                    row.slice_mut(s![start..start + layer.inputs])
                        .zip_mut_with(&a_row, |g, &av| *g = dv * av);
                }
                row.slice_mut(s![layer.bias_offset..layer.bias_offset + layer.outputs])
                    .assign(&d_row);
            }
        }
        phi
    }
}

impl FeatureMatrix for TangentFeatures {
    fn nrows(&self) -> usize {
        self.inputs[0].nrows()
    }

    fn ncols(&self) -> usize {
        self.num_params
    }

    fn select_rows(&self, rows: &[usize]) -> Matrix {
        self.select(rows)
    }

    /// Sum over layers of `(D D^T) * (A A^T + 1)`, elementwise.
    fn kernel(&self) -> Matrix {
        let n = FeatureMatrix::nrows(self);
        let mut k = Matrix::zeros((n, n));
        for (a, d) in self.inputs.iter().zip(&self.deltas) {
            let mut term = outer_gram(a.view());
            term += 1.0;
            term *= &outer_gram(d.view());
            k += &term;
        }
        k
    }

    fn t_dot(&self, v: ArrayView1<'_, f64>) -> Vector {
        let mut out = Vector::zeros(self.num_params);
        let weights = v.insert_axis(Axis(1));
        for ((layer, a), d) in self.layers.iter().zip(&self.inputs).zip(&self.deltas) {
            let scaled = d * &weights;
            let gw = scaled.t().dot(a);
            let wend = layer.weight_offset + layer.inputs * layer.outputs;
            out.slice_mut(s![layer.weight_offset..wend]).assign(&ArrayView1::from(
                gw.as_standard_layout().as_slice().expect("standard layout"),
            ));
            out.slice_mut(s![layer.bias_offset..layer.bias_offset + layer.outputs])
                .assign(&scaled.sum_axis(Axis(0)));
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.inputs.iter().chain(&self.deltas).all(|m| is_finite(m.iter()))
    }
}
