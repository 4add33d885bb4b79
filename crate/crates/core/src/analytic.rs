//! Closed-form importance values for Gaussian designs with linear fits,
//! used as ground truth by tests and experiment summaries.

use ndarray::Axis;

use crate::error::{Error, Result};
use crate::numerics::{solve_spd, Matrix, Vector};

/// Second moments of a mean-zero Gaussian design and its response.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelSpec {
    pub sigma: Matrix,
    /// `E(X Y)`.
    pub exy: Vector,
    /// Coefficients of the truth when it is linear.
    pub beta_true: Option<Vector>,
    pub noise_var: f64,
}

impl LinearModelSpec {
    /// Spec of `Y = X beta + eps` with `X ~ N(0, sigma)`.
    pub fn linear_truth(sigma: Matrix, beta: Vector, noise_var: f64) -> Self {
        let exy = sigma.dot(&beta);
        Self {
            sigma,
            exy,
            beta_true: Some(beta),
            noise_var,
        }
    }

    pub fn p(&self) -> usize {
        self.exy.len()
    }

    fn check_feature(&self, j: usize) -> Result<()> {
        if j >= self.p() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.p(),
            });
        }
        Ok(())
    }

    /// `(gamma_j, Sigma without row/column j, E(X_{-j} Y))`.
    fn partition(&self, j: usize) -> (Vector, Matrix, Vector) {
        let rest: Vec<usize> = (0..self.p()).filter(|&k| k != j).collect();
        let gamma = self.sigma.row(j).select(Axis(0), &rest);
        let sub = self.sigma.select(Axis(0), &rest).select(Axis(1), &rest);
        let exy_rest = self.exy.select(Axis(0), &rest);
        (gamma, sub, exy_rest)
    }

    /// `gamma_j^T Sigma_(j)^{-1} gamma_j`, the part of `Var(X_j)` explained
    /// by the other features.
    fn explained(&self, j: usize) -> Result<(f64, Vector, Vector)> {
        let (gamma, sub, exy_rest) = self.partition(j);
        if gamma.is_empty() {
            return Ok((0.0, gamma, exy_rest));
        }
        let solved = solve_spd(&sub, gamma.view())?;
        Ok((gamma.dot(&solved), solved, exy_rest))
    }
}

/// Importance of `X1` in `Y = b1 X1 + b2 X2 + eps` with
/// `X_i ~ N(0, sigma^2)` and correlation `rho`: `b1^2 (1 - rho^2) sigma^2`.
/// The second coefficient does not enter.
pub fn example1_vi(beta1: f64, _beta2: f64, rho: f64, sigma: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::OutOfRange {
            what: "correlation",
            value: rho,
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::OutOfRange {
            what: "standard deviation",
            value: sigma,
        });
    }
    Ok(beta1 * beta1 * (1.0 - rho * rho) * sigma * sigma)
}

/// Best linear coefficients `Sigma^{-1} E(X Y)`.
pub fn population_beta(spec: &LinearModelSpec) -> Result<Vector> {
    solve_spd(&spec.sigma, spec.exy.view())
}

/// Population dropout importance minus retrain importance of feature `j`
/// within the linear class:
///
/// `q / (Sigma_jj - q)^2 * (E(X_j Y) - gamma^T Sigma_(j)^{-1} E(X_{-j} Y))^2`
/// with `q = gamma^T Sigma_(j)^{-1} gamma` and `gamma = Sigma_{j,-j}`.
pub fn dropout_retrain_gap(spec: &LinearModelSpec, j: usize) -> Result<f64> {
    spec.check_feature(j)?;
    let (q, solved, exy_rest) = spec.explained(j)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let residual_var = spec.sigma[[j, j]] - q;
    let adjusted = spec.exy[j] - solved.dot(&exy_rest);
    Ok(q / (residual_var * residual_var) * adjusted * adjusted)
}

/// `(retrain, dropout)` importances of feature `j` under a linear truth:
/// `beta_j^2 (Sigma_jj - q)` and `beta_j^2 Sigma_jj`.
pub fn linear_truth_vis(spec: &LinearModelSpec, j: usize) -> Result<(f64, f64)> {
    spec.check_feature(j)?;
    let beta = spec.beta_true.as_ref().ok_or(Error::MissingBeta)?;
    let (q, _, _) = spec.explained(j)?;
    let b2 = beta[j] * beta[j];
    let sjj = spec.sigma[[j, j]];
    Ok((b2 * (sjj - q), b2 * sjj))
}

/// Best achievable accuracy when `Y ~ Bernoulli(Phi(S))` and `S` is known
/// up to independent Gaussian noise, i.e. `S / noise` has spread `ratio`.
fn probit_bayes_accuracy(ratio: f64) -> f64 {
    0.5 + ratio.atan() / std::f64::consts::PI
}

/// Accuracy importance of feature `j` when `Y ~ Bernoulli(Phi(X beta))` with
/// independent standard normal features: the Bayes accuracy of the full
/// design minus that of the design without `X_j`, whose contribution then
/// acts as extra probit noise.
pub fn probit_accuracy_vi(beta: &[f64], j: usize) -> Result<f64> {
    if j >= beta.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: beta.len(),
        });
    }
    let total: f64 = beta.iter().map(|b| b * b).sum();
    let rest = total - beta[j] * beta[j];
    let full = probit_bayes_accuracy(total.sqrt());
    let reduced = probit_bayes_accuracy((rest / (1.0 + beta[j] * beta[j])).sqrt());
    Ok(full - reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pair_correlated_cov, LINEAR_CORR_BETA};
    use crate::numerics::{mvn_sample, RngSeed};
    use crate::test_support::ols;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    fn linear_corr_spec(rho: f64) -> LinearModelSpec {
        LinearModelSpec::linear_truth(
            pair_correlated_cov(6, rho),
            Vector::from(LINEAR_CORR_BETA.to_vec()),
            0.01,
        )
    }

    #[test]
    fn example_closed_form() {
        assert_eq!(example1_vi(1.5, 1.2, 0.0, 1.0).unwrap(), 2.25);
        assert!((example1_vi(1.5, 1.2, 0.5, 1.0).unwrap() - 1.6875).abs() < 1e-15);
        assert!(example1_vi(1.5, 1.2, 1.0, 1.0).is_err());
        assert!(example1_vi(1.5, 1.2, 0.3, 0.0).is_err());
    }

    #[test]
    fn example_decreases_in_correlation() {
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let rho = k as f64 * 0.05;
            let v = example1_vi(1.5, 1.2, -rho, 1.3).unwrap();
            assert!(v < last || k == 0);
            assert_eq!(v, example1_vi(1.5, 1.2, rho, 1.3).unwrap());
            last = v;
        }
    }

    #[test]
    fn example_matches_large_sample_refit() {
        let (b1, b2, rho, sd) = (1.5, 1.2, 0.5, 1.0);
        let n = 1_000_000;
        let cov = array![[sd * sd, rho * sd * sd], [rho * sd * sd, sd * sd]];
        let x = mvn_sample(Array1::zeros(2).view(), &cov, n, RngSeed(11)).unwrap();
        let mut rng = RngSeed(12).rng();
        let y: Vector = x
            .rows()
            .into_iter()
            .map(|r| {
                let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                b1 * r[0] + b2 * r[1] + 0.1 * z
            })
            .collect();
        let mse = |pred: Vector| (&y - &pred).mapv(|v| v * v).mean().unwrap();
        let full = ols(x.view(), y.view(), false);
        let reduced = ols(x.slice(ndarray::s![.., 1..]), y.view(), false);
        let vi = mse(x.slice(ndarray::s![.., 1..]).dot(&reduced)) - mse(x.dot(&full));
        let truth = example1_vi(b1, b2, rho, sd).unwrap();
        assert!((vi - truth).abs() < 0.01, "{vi} vs {truth}");
    }

    #[test]
    fn identity_covariance_beta() {
        let spec = LinearModelSpec {
            sigma: Matrix::eye(3),
            exy: array![1.0, -2.0, 0.5],
            beta_true: None,
            noise_var: 1.0,
        };
        assert_eq!(population_beta(&spec).unwrap(), spec.exy);
    }

    #[test]
    fn two_variable_beta_recovered() {
        let (b1, b2, rho) = (1.5, 1.2, 0.4);
        let spec = LinearModelSpec {
            sigma: array![[1.0, rho], [rho, 1.0]],
            exy: array![b1 + rho * b2, rho * b1 + b2],
            beta_true: None,
            noise_var: 0.0,
        };
        let beta = population_beta(&spec).unwrap();
        assert!((beta[0] - b1).abs() < 1e-12 && (beta[1] - b2).abs() < 1e-12);
        let scaled = LinearModelSpec {
            exy: &spec.exy * 3.0,
            ..spec
        };
        let beta3 = population_beta(&scaled).unwrap();
        assert!((beta3[0] - 3.0 * b1).abs() < 1e-12);
    }

    #[test]
    fn gap_for_two_variables() {
        let spec = LinearModelSpec::linear_truth(pair_correlated_cov(2, 0.5), array![1.5, 1.2], 0.0);
        assert!((dropout_retrain_gap(&spec, 0).unwrap() - 0.5625).abs() < 1e-12);
    }

    #[test]
    fn independent_feature_has_no_gap() {
        let spec = linear_corr_spec(0.7);
        assert_eq!(dropout_retrain_gap(&spec, 2).unwrap(), 0.0);
        let (rt, dr) = linear_truth_vis(&spec, 2).unwrap();
        assert!((rt - 1.0).abs() < 1e-15 && (dr - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strongly_correlated_first_feature() {
        let spec = linear_corr_spec(0.8);
        let (rt, dr) = linear_truth_vis(&spec, 0).unwrap();
        assert!((rt - 0.81).abs() < 1e-12);
        assert!((dr - 2.25).abs() < 1e-12);
        assert!((dr - rt - dropout_retrain_gap(&spec, 0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn missing_truth() {
        let spec = LinearModelSpec {
            sigma: Matrix::eye(2),
            exy: array![1.0, 1.0],
            beta_true: None,
            noise_var: 0.0,
        };
        assert!(matches!(linear_truth_vis(&spec, 0), Err(Error::MissingBeta)));
        assert!(dropout_retrain_gap(&spec, 5).is_err());
    }

    fn spd_and_beta() -> impl Strategy<Value = (Matrix, Vector)> {
        (2usize..=8).prop_flat_map(|p| {
            (
                proptest::collection::vec(-1.0f64..1.0, p * p),
                proptest::collection::vec(-3.0f64..3.0, p),
            )
                .prop_map(move |(a, b)| {
                    let a = Matrix::from_shape_vec((p, p), a).unwrap();
                    let mut s = a.dot(&a.t());
                    for i in 0..p {
                        s[[i, i]] += 0.1;
                    }
                    (s, Vector::from(b))
                })
        })
    }

    #[test]
    fn probit_truths_match_simulation() {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let beta = crate::data::BINARY_BETA;
        let mut rng = RngSeed(8).rng();
        let draws = 400_000;
        let mut hits = [0usize; 3];
        for _ in 0..draws {
            let x: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
            let noise: f64 = rng.sample(StandardNormal);
            let y = beta[0] * x[0] + beta[1] * x[1] + noise > 0.0;
            let rules = [beta[0] * x[0] + beta[1] * x[1], beta[1] * x[1], beta[0] * x[0]];
            for (h, r) in hits.iter_mut().zip(rules) {
                *h += usize::from((r > 0.0) == y);
            }
        }
        let acc = hits.map(|h| h as f64 / draws as f64);
        // sd of an accuracy difference is below 1e-3 at this size
        assert!((probit_accuracy_vi(&beta, 0).unwrap() - (acc[0] - acc[1])).abs() < 4e-3);
        assert!((probit_accuracy_vi(&beta, 1).unwrap() - (acc[0] - acc[2])).abs() < 4e-3);
        assert!((probit_accuracy_vi(&beta, 0).unwrap() - 0.1360).abs() < 5e-4);
        assert!((probit_accuracy_vi(&beta, 1).unwrap() - 0.2357).abs() < 5e-4);
        assert_eq!(probit_accuracy_vi(&beta, 3).unwrap(), 0.0);
        assert!(probit_accuracy_vi(&beta, 4).is_err());
    }

    proptest! {
        #[test]
        fn gap_is_nonnegative_and_consistent((sigma, beta) in spd_and_beta()) {
            let spec = LinearModelSpec::linear_truth(sigma, beta, 1.0);
            for j in 0..spec.p() {
                let gap = dropout_retrain_gap(&spec, j).unwrap();
                prop_assert!(gap >= -1e-12);
                let (rt, dr) = linear_truth_vis(&spec, j).unwrap();
                let scale = 1.0 + dr.abs();
                prop_assert!((dr - rt - gap).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn decoupled_feature_has_zero_gap((sigma, beta) in spd_and_beta()) {
            let mut sigma = sigma;
            let p = sigma.nrows();
            for k in 1..p {
                sigma[[0, k]] = 0.0;
                sigma[[k, 0]] = 0.0;
            }
            let spec = LinearModelSpec::linear_truth(sigma, beta, 1.0);
            prop_assert_eq!(dropout_retrain_gap(&spec, 0).unwrap(), 0.0);
        }
    }
}
