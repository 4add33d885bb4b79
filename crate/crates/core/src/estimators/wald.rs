use crate::error::{Error, Result};
use crate::numerics::normal_quantile;

/// Two-sided `1 - alpha` Wald interval `vi ± z tau` with
/// `z = normal_quantile(1 - alpha / 2)`.
pub fn wald_ci(vi_hat: f64, tau_hat: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
        });
    }
    if !(tau_hat >= 0.0) || !tau_hat.is_finite() {
        return Err(Error::OutOfRange {
            what: "standard error",
            value: tau_hat,
        });
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok((vi_hat - z * tau_hat, vi_hat + z * tau_hat))
}
