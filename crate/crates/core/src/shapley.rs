//! Shapley values of features, where the value of a coalition is the test
//! skill of a model refitted with every feature outside it mean-imputed.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{impute_columns, Split};
use crate::error::{Error, Result};
use crate::estimators::{eval_skill, lazy_refit, LazyConfig, Method, SkillMeasure};
use crate::network::{train, MlpModel, TrainOptions};
use crate::numerics::RngSeed;
use crate::par::{try_map_indexed, Execution};

/// Largest feature count accepted by [`shapley_exact`].
pub const MAX_EXACT_FEATURES: usize = 12;

/// How reduced models are obtained for each coalition.
#[derive(Debug, Clone, PartialEq)]
pub enum CoalitionMethod {
    Lazy(LazyConfig),
    /// Fresh training; the initialisation seed is derived from the
    /// coalition itself so results do not depend on evaluation order.
    Retrain(TrainOptions),
}

impl CoalitionMethod {
    pub fn method(&self) -> Method {
        match self {
            CoalitionMethod::Lazy(_) => Method::Lazy,
            CoalitionMethod::Retrain(_) => Method::Retrain,
        }
    }
}

/// Bit set over feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    words: Vec<u64>,
    p: usize,
}

impl Coalition {
    pub fn empty(p: usize) -> Self {
        Self {
            words: vec![0; p.div_ceil(64).max(1)],
            p,
        }
    }

    pub fn full(p: usize) -> Self {
        let mut c = Self::empty(p);
        for j in 0..p {
            c.insert(j);
        }
        c
    }

    pub fn from_members(p: usize, members: &[usize]) -> Result<Self> {
        let mut c = Self::empty(p);
        for &j in members {
            if j >= p {
                return Err(Error::IndexOutOfRange { index: j, len: p });
            }
            c.insert(j);
        }
        Ok(c)
    }

    pub fn insert(&mut self, j: usize) {
        self.words[j / 64] |= 1 << (j % 64);
    }

    pub fn contains(&self, j: usize) -> bool {
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| self.contains(j)).collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| !self.contains(j)).collect()
    }

    /// Stable 64-bit digest (FNV-1a over the words).
    fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in &self.words {
            for byte in w.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionFit {
    pub subset: Vec<usize>,
    pub skill: f64,
    pub method: Method,
    pub lambda: Option<f64>,
}

/// Test skill of the model refitted on coalition `s`. The full coalition is
/// scored with `full` itself.
pub fn fit_coalition(
    full: &MlpModel,
    split: &Split,
    s: &Coalition,
    m: SkillMeasure,
    method: &CoalitionMethod,
) -> Result<CoalitionFit> {
    let subset = s.members();
    if subset.len() == split.train.p() {
        return Ok(CoalitionFit {
            subset,
            skill: eval_skill(full, &split.test, m)?,
            method: method.method(),
            lambda: None,
        });
    }
    let removed = s.complement();
    let train_s = impute_columns(&split.train, &removed)?;
    let test_s = impute_columns(&split.test, &removed)?;
    let (model, lambda) = match method {
        CoalitionMethod::Lazy(cfg) => {
            let (model, lambda) = lazy_refit(full, &train_s, cfg)?;
            (model, Some(lambda))
        }
        CoalitionMethod::Retrain(opts) => {
            let init = MlpModel::init(full.config.clone(), opts.seed.derive(s.digest()))?;
            (train(&init, &train_s, opts)?, None)
        }
    };
    Ok(CoalitionFit {
        subset,
        skill: eval_skill(&model, &test_s, m)?,
        method: method.method(),
        lambda,
    })
}

/// Memoised coalition values for one full model and split.
pub struct CoalitionValues<'a> {
    full: &'a MlpModel,
    split: &'a Split,
    measure: SkillMeasure,
    method: CoalitionMethod,
    memo: Mutex<HashMap<Coalition, f64>>,
}

impl<'a> CoalitionValues<'a> {
    pub fn new(full: &'a MlpModel, split: &'a Split, measure: SkillMeasure, method: CoalitionMethod) -> Self {
        Self {
            full,
            split,
            measure,
            method,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn p(&self) -> usize {
        self.split.train.p()
    }

    /// The fit itself runs outside the lock; concurrent requests for the
    /// same coalition compute identical values.
    pub fn value(&self, s: &Coalition) -> Result<f64> {
        if let Some(&v) = self.memo.lock().expect("memo lock").get(s) {
            return Ok(v);
        }
        let v = fit_coalition(self.full, self.split, s, self.measure, &self.method)?.skill;
        self.memo.lock().expect("memo lock").insert(s.clone(), v);
        Ok(v)
    }

    pub fn fits(&self) -> usize {
        self.memo.lock().expect("memo lock").len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub psi: Vec<f64>,
    pub se: Vec<f64>,
    /// Permutations drawn, or coalitions enumerated for the exact value.
    pub num_samples: usize,
}

impl ShapleyEstimate {
    /// `(feature, psi, se)` rows with one-based features.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "psi", "se"])?;
        for (j, (psi, se)) in self.psi.iter().zip(&self.se).enumerate() {
            w.write_record([(j + 1).to_string(), psi.to_string(), se.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn coalition_from_mask(p: usize, mask: usize) -> Coalition {
    let mut c = Coalition::empty(p);
    for j in 0..p {
        if mask >> j & 1 == 1 {
            c.insert(j);
        }
    }
    c
}

/// Weighted sum over every coalition; `2^p` fits.
pub fn shapley_exact(values: &CoalitionValues<'_>, exec: Execution) -> Result<ShapleyEstimate> {
    let p = values.p();
    if p > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures(p));
    }
    let count = 1usize << p;
    let v = try_map_indexed(exec, count, |mask| values.value(&coalition_from_mask(p, mask)))?;
    let mut psi = vec![0.0; p];
    for mask in 0..count {
        let size = mask.count_ones() as usize;
        if size == p {
            continue;
        }
        let weight = 1.0 / (p as f64 * binomial(p - 1, size));
        for (j, psi_j) in psi.iter_mut().enumerate() {
            if mask >> j & 1 == 0 {
                *psi_j += weight * (v[mask | 1 << j] - v[mask]);
            }
        }
    }
    Ok(ShapleyEstimate {
        psi,
        se: vec![0.0; p],
        num_samples: count,
    })
}

/// Monte Carlo over uniformly random orderings; each ordering contributes
/// the marginal gain of every feature over the features preceding it.
/// `se` is the standard error of the mean across orderings.
pub fn shapley_sampled(
    values: &CoalitionValues<'_>,
    num_permutations: usize,
    seed: RngSeed,
    exec: Execution,
) -> Result<ShapleyEstimate> {
    if num_permutations == 0 {
        return Err(Error::InvalidArgument("at least one permutation is required".into()));
    }
    let p = values.p();
    let marginals = try_map_indexed(exec, num_permutations, |k| -> Result<Vec<f64>> {
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut seed.derive(k as u64).rng());
        let mut prefix = Coalition::empty(p);
        let mut previous = values.value(&prefix)?;
        let mut gains = vec![0.0; p];
        for j in order {
            prefix.insert(j);
            let current = values.value(&prefix)?;
            gains[j] = current - previous;
            previous = current;
        }
        Ok(gains)
    })?;
    let count = num_permutations as f64;
    let mut psi = vec![0.0; p];
    let mut se = vec![0.0; p];
    for j in 0..p {
        let mean = marginals.iter().map(|g| g[j]).sum::<f64>() / count;
        psi[j] = mean;
        if num_permutations > 1 {
            let var = marginals.iter().map(|g| (g[j] - mean).powi(2)).sum::<f64>() / (count - 1.0);
            se[j] = (var / count).sqrt();
        }
    }
    Ok(ShapleyEstimate {
        psi,
        se,
        num_samples: num_permutations,
    })
}
