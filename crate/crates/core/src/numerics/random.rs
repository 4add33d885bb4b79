use ndarray::ArrayView1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, Matrix};
use crate::error::{Error, Result};

/// Seed for a deterministic random stream.
///
/// Streams are ChaCha8, so a given seed yields the same numbers on every
/// platform. Independent sub-streams come from [`RngSeed::derive`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for sub-stream `stream`, mixed with splitmix64.
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        RngSeed(seed)
    }
}

/// `n` i.i.d. rows from `N(mean, cov)`.
pub fn mvn_sample(mean: ArrayView1<'_, f64>, cov: &Matrix, n: usize, seed: RngSeed) -> Result<Matrix> {
    mvn_sample_with(mean, cov, n, &mut seed.rng())
}

pub fn mvn_sample_with<R: Rng + ?Sized>(
    mean: ArrayView1<'_, f64>,
    cov: &Matrix,
    n: usize,
    rng: &mut R,
) -> Result<Matrix> {
    let p = mean.len();
    if cov.nrows() != p {
        return Err(Error::DimensionMismatch {
            what: "covariance size vs mean length",
            expected: p,
            got: cov.nrows(),
        });
    }
    let l = cholesky(cov)?;
    let z = Matrix::from_shape_simple_fn((n, p), || rng.sample(StandardNormal));
    let mut x = z.dot(&l.t());
    for mut row in x.rows_mut() {
        row += &mean;
    }
    Ok(x)
}
