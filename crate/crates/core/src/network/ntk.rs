use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::MlpModel;
use crate::error::Result;
use crate::numerics::{FeatureMatrix, Matrix};

/// Empirical neural tangent kernel `K = Phi Phi^T` at the model's parameters.
pub fn ntk_matrix(model: &MlpModel, x: ArrayView2<'_, f64>) -> Result<Matrix> {
    Ok(model.tangent_features(x)?.kernel())
}

/// `tr(K) = sum_i |phi_i|^2`, without forming `K`.
pub fn ntk_trace(model: &MlpModel, x: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(model.tangent_features(x)?.squared_norms().sum())
}

/// Least-squares line `trace ~ intercept + slope * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn trace_linear_fit(sizes: &[f64], traces: &[f64]) -> TraceFit {
    let n = sizes.len() as f64;
    let mx = sizes.iter().sum::<f64>() / n;
    let my = traces.iter().sum::<f64>() / n;
    let sxy: f64 = sizes.iter().zip(traces).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = sizes.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = traces.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = sizes
        .iter()
        .zip(traces)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    TraceFit {
        slope,
        intercept,
        r_squared,
    }
}
