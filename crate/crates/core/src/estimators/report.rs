use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::wald_ci;
use crate::error::Result;
use crate::numerics::{mean, population_variance, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dropout,
    Retrain,
    Lazy,
    LazyEs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dropout => "dropout",
            Method::Retrain => "retrain",
            Method::Lazy => "lazy",
            Method::LazyEs => "lazy_es",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dropout" => Ok(Method::Dropout),
            "retrain" => Ok(Method::Retrain),
            "lazy" => Ok(Method::Lazy),
            "lazy_es" => Ok(Method::LazyEs),
            other => Err(crate::Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// One variable-importance estimate with its plug-in standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViEstimate {
    /// Zero-based feature index.
    pub variable: usize,
    pub method: Method,
    pub vi_hat: f64,
    pub tau_hat: f64,
    pub ci: (f64, f64),
    pub alpha: f64,
    pub seconds: f64,
    pub lambda_used: Option<f64>,
    /// Per-test-row skill differences; `vi_hat` is their mean.
    #[serde(skip)]
    pub terms: Vector,
}

impl ViEstimate {
    /// `vi_hat = mean(t)`, `tau_hat = sqrt(var(t) / n2)` with the `1/n2`
    /// variance.
    pub(crate) fn from_terms(
        variable: usize,
        method: Method,
        terms: Vector,
        alpha: f64,
        started: Instant,
        lambda_used: Option<f64>,
    ) -> Result<Self> {
        let slice = terms.as_slice().expect("contiguous");
        let vi_hat = mean(slice);
        let tau_hat = (population_variance(slice) / slice.len() as f64).sqrt();
        let ci = wald_ci(vi_hat, tau_hat, alpha)?;
        Ok(Self {
            variable,
            method,
            vi_hat,
            tau_hat,
            ci,
            alpha,
            seconds: started.elapsed().as_secs_f64(),
            lambda_used,
            terms,
        })
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.ci.0 <= truth && truth <= self.ci.1
    }
}

/// Writes `(variable, method, vi, se, ci_lo, ci_hi, lambda, seconds)` rows.
/// Variables are written one-based.
pub fn write_estimates_csv<W: Write>(out: W, estimates: &[ViEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "method", "vi", "se", "ci_lo", "ci_hi", "lambda", "seconds"])?;
    for e in estimates {
        w.write_record([
            (e.variable + 1).to_string(),
            e.method.to_string(),
            e.vi_hat.to_string(),
            e.tau_hat.to_string(),
            e.ci.0.to_string(),
            e.ci.1.to_string(),
            e.lambda_used.map(|l| l.to_string()).unwrap_or_default(),
            e.seconds.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
