//! Datasets, mean imputation, train/test splits, CSV ingestion and the
//! synthetic generators used by the experiments.

mod csv_io;
mod synth;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, write_csv};
pub use synth::{
    gen_binary_probit, gen_highdim_teacher, gen_linear_corr, gen_linear_corr_with_noise, gen_logistic_sparse,
    pair_correlated_cov, HighDimTeacher, BINARY_BETA, LINEAR_CORR_BETA, LINEAR_CORR_NOISE_SD, SPARSE_BETA_HEAD,
};

use crate::error::{Error, Result};
use crate::numerics::{is_finite, Matrix, RngSeed, Vector};

/// Feature matrix, response and the column means used for imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vector,
    column_means: Vector,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset whose imputation means are its own column means.
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        let means = if x.nrows() == 0 {
            Vector::zeros(x.ncols())
        } else {
            x.mean_axis(Axis(0)).expect("non-empty rows")
        };
        Self::with_means(x, y, means)
    }

    /// Builds a dataset that imputes with externally supplied means
    /// (typically those of a training split).
    pub fn with_means(x: Matrix, y: Vector, column_means: Vector) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "response length vs feature rows",
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if column_means.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                what: "column means vs features",
                expected: x.ncols(),
                got: column_means.len(),
            });
        }
        if !is_finite(x.iter()) || !is_finite(y.iter()) || !is_finite(column_means.iter()) {
            return Err(Error::NonFiniteInput("dataset"));
        }
        Ok(Self {
            x,
            y,
            column_means,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "feature names",
                expected: self.p(),
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column_means(&self) -> ArrayView1<'_, f64> {
        self.column_means.view()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Name of feature `j`, falling back to `x{j+1}`.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("x{}", j + 1),
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `rows`, imputing with `means`.
    pub fn subset(&self, rows: &[usize], means: Vector) -> Result<Self> {
        let x = self.x.select(Axis(0), rows);
        let y = self.y.select(Axis(0), rows);
        let mut d = Self::with_means(x, y, means)?;
        d.feature_names = self.feature_names.clone();
        Ok(d)
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

    fn impute_in_place(&mut self, j: usize) {
        let mu = self.column_means[j];
        self.x.column_mut(j).fill(mu);
    }

    pub fn to_json(&self) -> Result<String> {
        let export = DatasetJson {
            feature_names: (0..self.p()).map(|j| self.feature_name(j)).collect(),
            rows: self.x.rows().into_iter().map(|r| r.to_vec()).collect(),
            y: self.y.to_vec(),
            column_means: self.column_means.to_vec(),
        };
        Ok(serde_json::to_string_pretty(&export)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: DatasetJson = serde_json::from_str(text)?;
        let p = parsed.column_means.len();
        let n = parsed.rows.len();
        let mut flat = Vec::with_capacity(n * p);
        for row in &parsed.rows {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "dataset json row",
                    expected: p,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        let x = Matrix::from_shape_vec((n, p), flat).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::with_means(x, Vector::from(parsed.y), Vector::from(parsed.column_means))?
            .with_feature_names(parsed.feature_names)
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    column_means: Vec<f64>,
}

/// Copy of `d` with feature `j` replaced by its imputation mean.
pub fn dropout_transform(d: &Dataset, j: usize) -> Result<Dataset> {
    d.check_feature(j)?;
    let mut out = d.clone();
    out.impute_in_place(j);
    Ok(out)
}

/// Copy of `d` with every feature in `columns` mean-imputed, one column at a
/// time through the same rule as [`dropout_transform`].
pub fn impute_columns(d: &Dataset, columns: &[usize]) -> Result<Dataset> {
    let mut out = d.clone();
    for &j in columns {
        out.check_feature(j)?;
        out.impute_in_place(j);
    }
    Ok(out)
}

/// Disjoint train/test partition. Both parts impute with the training means.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Uniformly random split with `n1` training rows.
pub fn split(d: &Dataset, n1: usize, seed: RngSeed) -> Result<Split> {
    let n = d.n();
    if n1 == 0 || n1 >= n {
        return Err(Error::BadSize { n1, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng());
    let mut train_rows = order[..n1].to_vec();
    let mut test_rows = order[n1..].to_vec();
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    let train_x = d.x.select(Axis(0), &train_rows);
    let means = train_x.mean_axis(Axis(0)).expect("n1 > 0");
    let train = d.subset(&train_rows, means.clone())?;
    let test = d.subset(&test_rows, means)?;
    Ok(Split {
        train,
        test,
        train_rows,
        test_rows,
    })
}
