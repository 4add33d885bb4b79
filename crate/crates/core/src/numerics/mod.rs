//! Dense linear algebra, seeded sampling and the handful of statistical
//! primitives the estimators need.

mod linalg;
mod random;
mod ridge;
mod stats;

pub use linalg::{
    cholesky, cholesky_solve, gram, is_finite, outer_gram, solve_lower, solve_lower_transpose, solve_spd, Matrix,
    Vector, PIVOT_TOLERANCE,
};
pub use random::{mvn_sample, mvn_sample_with, RngSeed};
pub use ridge::{ridge_solve, ridge_solve_dual, ridge_solve_primal, FeatureMatrix, PartitionedRidge, RidgeSubproblem};
pub use stats::{mean, normal_cdf, normal_quantile, population_variance};
