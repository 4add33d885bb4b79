//! Remove-and-retrain curves: features are imputed in order of a saliency
//! ranking and the test error of the reduced models is tracked.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{impute_columns, Dataset, Split};
use crate::error::{Error, Result};
use crate::estimators::{lazy_refit, LazyConfig, Method};
use crate::network::{train, MlpModel, TrainOptions};
use crate::numerics::RngSeed;
use crate::par::{try_map_indexed, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingSource {
    Grad,
    Random,
    Given,
}

impl OrderingSource {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderingSource::Grad => "grad",
            OrderingSource::Random => "random",
            OrderingSource::Given => "given",
        }
    }
}

/// Features from most to least important.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub ranked: Vec<usize>,
    pub source: OrderingSource,
}

impl Ordering {
    pub fn given(ranked: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; ranked.len()];
        for &j in &ranked {
            if j >= ranked.len() || seen[j] {
                return Err(Error::InvalidArgument(format!(
                    "ordering is not a permutation of 0..{}",
                    ranked.len()
                )));
            }
            seen[j] = true;
        }
        Ok(Self {
            ranked,
            source: OrderingSource::Given,
        })
    }

    pub fn random(p: usize, seed: RngSeed) -> Self {
        let mut ranked: Vec<usize> = (0..p).collect();
        ranked.shuffle(&mut seed.rng());
        Self {
            ranked,
            source: OrderingSource::Random,
        }
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Mean absolute input gradient of every feature over the rows of `d`.
pub fn grad_importance(model: &MlpModel, d: &Dataset) -> Result<Vec<f64>> {
    let grads = model.input_gradients(d.x())?;
    let n = grads.nrows().max(1) as f64;
    Ok(grads
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|g| g.abs()).sum::<f64>() / n)
        .collect())
}

/// Ranks features by [`grad_importance`], descending, ties by index.
pub fn grad_saliency(model: &MlpModel, d: &Dataset) -> Result<Ordering> {
    let scores = grad_importance(model, d)?;
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(Ordering {
        ranked,
        source: OrderingSource::Grad,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoarPoint {
    pub t: f64,
    pub removed: usize,
    pub method: Method,
    pub mse: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoarCurve {
    pub proportions: Vec<f64>,
    pub ordering: Ordering,
    pub points: Vec<RoarPoint>,
}

impl RoarCurve {
    pub fn mse(&self, t: f64, method: Method) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.t == t && p.method == method)
            .map(|p| p.mse)
    }

    pub fn total_seconds(&self, method: Method) -> f64 {
        self.points
            .iter()
            .filter(|p| p.method == method)
            .map(|p| p.seconds)
            .sum()
    }

    /// `(t, method, mse, seconds)` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "method", "mse", "seconds"])?;
        for p in &self.points {
            w.write_record([
                p.t.to_string(),
                p.method.to_string(),
                p.mse.to_string(),
                p.seconds.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Number of features removed at proportion `t`: `ceil(t p)`.
pub fn removed_count(t: f64, p: usize) -> usize {
    // guard against 0.29 * 100 = 28.999...
    let raw = t * p as f64;
    let rounded = raw.round();
    let k = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (k as usize).min(p)
}

fn check_proportions(ts: &[f64]) -> Result<()> {
    for &t in ts {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange {
                what: "removal proportion",
                value: t,
            });
        }
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("proportions must be strictly increasing".into()));
    }
    Ok(())
}

/// Test MSE of each method after imputing the top `ceil(t p)` features for
/// every `t`. `full` must be trained on `split.train`; retraining uses
/// `opts` with a seed derived from the number of removed features, and the
/// lazy refit uses `lazy`.
#[allow(clippy::too_many_arguments)]
pub fn roar_curve(
    full: &MlpModel,
    split: &Split,
    ordering: &Ordering,
    ts: &[f64],
    methods: &[Method],
    opts: &TrainOptions,
    lazy: &LazyConfig,
    exec: Execution,
) -> Result<RoarCurve> {
    check_proportions(ts)?;
    let p = split.train.p();
    if ordering.len() != p {
        return Err(Error::DimensionMismatch {
            what: "ordering length vs features",
            expected: p,
            got: ordering.len(),
        });
    }
    if let Some(m) = methods.iter().find(|m| matches!(m, Method::LazyEs)) {
        return Err(Error::InvalidArgument(format!(
            "method `{m}` is not available for curves"
        )));
    }
    let full_mse = full.mse(split.test.x(), split.test.y())?;
    let jobs: Vec<(f64, Method)> = ts.iter().flat_map(|&t| methods.iter().map(move |&m| (t, m))).collect();
    let points = try_map_indexed(exec, jobs.len(), |k| -> Result<RoarPoint> {
        let (t, method) = jobs[k];
        let started = Instant::now();
        let removed = removed_count(t, p);
        let mse = if removed == 0 {
            full_mse
        } else {
            let cols = &ordering.ranked[..removed];
            let train_t = impute_columns(&split.train, cols)?;
            let test_t = impute_columns(&split.test, cols)?;
            let model = match method {
                Method::Dropout => full.clone(),
                Method::Retrain => {
                    let init = MlpModel::init(full.config.clone(), opts.seed.derive(removed as u64))?;
                    train(&init, &train_t, opts)?
                }
                Method::Lazy => lazy_refit(full, &train_t, lazy)?.0,
                Method::LazyEs => unreachable!("rejected above"),
            };
            model.mse(test_t.x(), test_t.y())?
        };
        Ok(RoarPoint {
            t,
            removed,
            method,
            mse,
            seconds: started.elapsed().as_secs_f64(),
        })
    })?;
    Ok(RoarCurve {
        proportions: ts.to_vec(),
        ordering: ordering.clone(),
        points,
    })
}
