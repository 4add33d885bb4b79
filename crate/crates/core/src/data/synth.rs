use ndarray::{Array1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{mvn_sample_with, normal_cdf, Matrix, RngSeed, Vector};

/// Coefficients of the correlated linear benchmark on its six features.
pub const LINEAR_CORR_BETA: [f64; 6] = [1.5, 1.2, 1.0, 0.0, 0.0, 0.0];
/// Noise standard deviation of the correlated linear benchmark.
pub const LINEAR_CORR_NOISE_SD: f64 = 0.1;
/// Probit coefficients of the binary benchmark.
pub const BINARY_BETA: [f64; 4] = [2.5, 3.5, 0.0, 0.0];
/// Leading non-zero coefficients of the sparse 100-feature designs.
pub const SPARSE_BETA_HEAD: [f64; 5] = [5.0, 4.0, 3.0, 2.0, 1.0];

fn names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return Err(Error::OutOfRange {
            what: "correlation",
            value: rho,
        });
    }
    Ok(())
}

/// Identity covariance except `Corr(X1, X2) = rho`.
pub fn pair_correlated_cov(p: usize, rho: f64) -> Matrix {
    let mut cov = Matrix::eye(p);
    if p >= 2 {
        cov[[0, 1]] = rho;
        cov[[1, 0]] = rho;
    }
    cov
}

fn sparse_beta(p: usize) -> Vector {
    let mut beta = Vector::zeros(p);
    for (b, v) in beta.iter_mut().zip(SPARSE_BETA_HEAD) {
        *b = v;
    }
    beta
}

/// `Y = 1.5 X1 + 1.2 X2 + X3 + eps` with six Gaussian features,
/// `Corr(X1, X2) = rho` and noise standard deviation 0.1.
pub fn gen_linear_corr(n: usize, rho: f64, seed: RngSeed) -> Result<Dataset> {
    gen_linear_corr_with_noise(n, rho, LINEAR_CORR_NOISE_SD, seed)
}

pub fn gen_linear_corr_with_noise(n: usize, rho: f64, noise_sd: f64, seed: RngSeed) -> Result<Dataset> {
    check_rho(rho)?;
    let mut rng = seed.rng();
    let cov = pair_correlated_cov(6, rho);
    let x = mvn_sample_with(Array1::zeros(6).view(), &cov, n, &mut rng)?;
    let beta = Vector::from(LINEAR_CORR_BETA.to_vec());
    let mut y = x.dot(&beta);
    for v in y.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += noise_sd * z;
    }
    Dataset::new(x, y)?.with_feature_names(names(6))
}

/// Four independent standard normal features with
/// `Y ~ Bernoulli(Phi(2.5 X1 + 3.5 X2))`.
pub fn gen_binary_probit(n: usize, seed: RngSeed) -> Result<Dataset> {
    let mut rng = seed.rng();
    let x = mvn_sample_with(Array1::zeros(4).view(), &Matrix::eye(4), n, &mut rng)?;
    let score = x.dot(&Vector::from(BINARY_BETA.to_vec()));
    let y = score.mapv(|s| {
        let u: f64 = rng.random();
        if u < normal_cdf(s) {
            1.0
        } else {
            0.0
        }
    });
    Dataset::new(x, y)?.with_feature_names(names(4))
}

/// Sparse logistic design: 100 features, `Corr(X1, X2) = 0.75`,
/// `logit P(Y = 1) = X beta` with `beta = (5, 4, 3, 2, 1, 0, ...)`.
pub fn gen_logistic_sparse(n: usize, seed: RngSeed) -> Result<Dataset> {
    let p = 100;
    let mut rng = seed.rng();
    let x = mvn_sample_with(Array1::zeros(p).view(), &pair_correlated_cov(p, 0.75), n, &mut rng)?;
    let eta = x.dot(&sparse_beta(p));
    let y = eta.mapv(|s| {
        let u: f64 = rng.random();
        if u < 1.0 / (1.0 + (-s).exp()) {
            1.0
        } else {
            0.0
        }
    });
    Dataset::new(x, y)?.with_feature_names(names(p))
}

/// Random one-hidden-layer ReLU teacher `Y = V relu(W X) + eps`, with the
/// weights of feature `j` drawn around `beta_j`.
#[derive(Debug, Clone)]
pub struct HighDimTeacher {
    /// `m x p`; column `j` is drawn from `N(beta_j, sigma_w^2)`.
    pub w: Matrix,
    /// Output row, entries `N(0, 1)`.
    pub v: Vector,
    pub rho: f64,
    pub noise_sd: f64,
    pub seed: RngSeed,
}

impl HighDimTeacher {
    pub const P: usize = 100;
    pub const WIDTH: usize = 50;

    pub fn sample(sigma_w: f64, seed: RngSeed) -> Self {
        let (p, m) = (Self::P, Self::WIDTH);
        let beta = sparse_beta(p);
        let mut rng = seed.rng();
        let w = Matrix::from_shape_fn((m, p), |(_, j)| {
            let z: f64 = rng.sample(StandardNormal);
            beta[j] + sigma_w * z
        });
        let v = Vector::from_shape_simple_fn(m, || rng.sample(StandardNormal));
        Self {
            w,
            v,
            rho: 0.5,
            noise_sd: 0.1,
            seed,
        }
    }

    pub fn generate(&self, n: usize, seed: RngSeed) -> Result<Dataset> {
        let p = Self::P;
        let mut rng = seed.rng();
        let x = mvn_sample_with(Array1::zeros(p).view(), &pair_correlated_cov(p, self.rho), n, &mut rng)?;
        let hidden = x.dot(&self.w.t()).mapv(|z| z.max(0.0));
        let mut y = hidden.dot(&self.v);
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += self.noise_sd * z;
        }
        Dataset::new(x, y)?.with_feature_names(names(p))
    }

    /// Mean of teacher column `j`, for diagnostics.
    pub fn column_mean(&self, j: usize) -> f64 {
        self.w.index_axis(Axis(1), j).mean().unwrap_or(f64::NAN)
    }
}

/// Samples a teacher from `seed` and draws `n` rows from it.
pub fn gen_highdim_teacher(n: usize, sigma_w: f64, seed: RngSeed) -> Result<Dataset> {
    HighDimTeacher::sample(sigma_w, seed.derive(0)).generate(n, seed.derive(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{correlation, ols};

    #[test]
    fn linear_corr_correlation() {
        for &rho in &[0.0, 0.5] {
            let d = gen_linear_corr(50_000, rho, RngSeed(1)).unwrap();
            let r = correlation(d.x().column(0), d.x().column(1));
            assert!((r - rho).abs() < 0.03, "rho {rho}: {r}");
        }
    }

    #[test]
    fn linear_corr_ols_recovers_coefficients() {
        let d = gen_linear_corr(100_000, 0.5, RngSeed(2)).unwrap();
        let beta = ols(d.x(), d.y(), false);
        for (b, t) in beta.iter().zip(LINEAR_CORR_BETA) {
            assert!((b - t).abs() < 0.02, "{b} vs {t}");
        }
    }

    #[test]
    fn linear_corr_response_variance() {
        let rho = 0.6;
        let d = gen_linear_corr(200_000, rho, RngSeed(3)).unwrap();
        let y = d.y();
        let m = y.mean().unwrap();
        let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64;
        let target = 1.5f64.powi(2) + 1.2f64.powi(2) + 1.0 + 2.0 * 1.5 * 1.2 * rho + 0.01;
        assert!((var / target - 1.0).abs() < 0.03, "{var} vs {target}");
    }

    #[test]
    fn linear_corr_rejects_unit_correlation() {
        assert!(gen_linear_corr(10, 1.0, RngSeed(0)).is_err());
    }

    #[test]
    fn binary_is_balanced() {
        let d = gen_binary_probit(40_000, RngSeed(4)).unwrap();
        let m = d.y().mean().unwrap();
        assert!((m - 0.5).abs() < 0.02);
        assert!(d.y().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn binary_conditional_frequency() {
        let d = gen_binary_probit(400_000, RngSeed(5)).unwrap();
        let beta = Vector::from(BINARY_BETA.to_vec());
        let score = d.x().dot(&beta);
        let (mut hits, mut total) = (0.0, 0.0);
        for (s, y) in score.iter().zip(d.y()) {
            if (0.9..=1.1).contains(s) {
                total += 1.0;
                hits += y;
            }
        }
        assert!(total > 1000.0);
        assert!((hits / total - normal_cdf(1.0)).abs() < 0.05);
    }

    #[test]
    fn binary_ignores_null_columns() {
        // permuting the null columns across rows leaves the probit score unchanged
        let d = gen_binary_probit(200, RngSeed(6)).unwrap();
        let beta = Vector::from(BINARY_BETA.to_vec());
        let mut x = d.x().to_owned();
        let rev: Vec<usize> = (0..200).rev().collect();
        let c2 = x.column(2).select(Axis(0), &rev);
        let c3 = x.column(3).select(Axis(0), &rev);
        x.column_mut(2).assign(&c3);
        x.column_mut(3).assign(&c2);
        assert_eq!(x.dot(&beta), d.x().dot(&beta));
    }

    #[test]
    fn teacher_null_columns_centred() {
        let sigma = 0.3;
        let t = HighDimTeacher::sample(sigma, RngSeed(7));
        let bound = 3.0 * sigma / (HighDimTeacher::WIDTH as f64).sqrt();
        // j >= 6 in one-based numbering
        for j in 5..HighDimTeacher::P {
            assert!(t.column_mean(j).abs() <= bound, "column {j}");
        }
        assert!((t.column_mean(0) - 5.0).abs() <= bound);
    }

    #[test]
    fn teacher_correlation_and_determinism() {
        let d = gen_highdim_teacher(20_000, 0.3, RngSeed(8)).unwrap();
        assert_eq!(d.p(), 100);
        let r = correlation(d.x().column(0), d.x().column(1));
        assert!((r - 0.5).abs() < 0.03);
        let a = gen_highdim_teacher(50, 0.3, RngSeed(9)).unwrap();
        let b = gen_highdim_teacher(50, 0.3, RngSeed(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.y().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            gen_linear_corr(30, 0.3, RngSeed(1)).unwrap(),
            gen_linear_corr(30, 0.3, RngSeed(1)).unwrap()
        );
        assert_eq!(
            gen_binary_probit(30, RngSeed(1)).unwrap(),
            gen_binary_probit(30, RngSeed(1)).unwrap()
        );
        assert_eq!(
            gen_logistic_sparse(30, RngSeed(1)).unwrap(),
            gen_logistic_sparse(30, RngSeed(1)).unwrap()
        );
    }
}
