use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::MlpModel;
use crate::numerics::Vector;

/// Predictive skill: larger is better.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillMeasure {
    /// `-(1/n) sum (y - f(x))^2`.
    #[default]
    NegMse,
    /// Fraction of rows where `f(x) >= 0.5` agrees with `y = 1`. A prediction
    /// of exactly 0.5 counts as class 1.
    Accuracy,
}

impl SkillMeasure {
    /// Per-row contribution whose mean is the skill.
    pub fn pointwise(self, y: f64, prediction: f64) -> f64 {
        match self {
            SkillMeasure::NegMse => -(y - prediction) * (y - prediction),
            SkillMeasure::Accuracy => {
                let class = if prediction >= 0.5 { 1.0 } else { 0.0 };
                if class == y {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn skill(self, y: ArrayView1<'_, f64>, predictions: ArrayView1<'_, f64>) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if y.len() != predictions.len() {
            return Err(Error::DimensionMismatch {
                what: "predictions vs responses",
                expected: y.len(),
                got: predictions.len(),
            });
        }
        let total: f64 = y.iter().zip(predictions).map(|(&t, &f)| self.pointwise(t, f)).sum();
        Ok(total / y.len() as f64)
    }
}

/// Anything that maps a batch of rows to predictions.
pub trait Predict {
    fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vector>;
}

impl Predict for MlpModel {
    fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vector> {
        self.predict(x)
    }
}

/// Adapts a row-wise closure to [`Predict`].
pub struct PredictFn<F>(pub F);

impl<F> Predict for PredictFn<F>
where
    F: Fn(ArrayView1<'_, f64>) -> f64,
{
    fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vector> {
        Ok(x.rows().into_iter().map(|r| (self.0)(r)).collect())
    }
}

pub fn eval_skill<P: Predict + ?Sized>(model: &P, d: &Dataset, m: SkillMeasure) -> Result<f64> {
    if d.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let pred = model.predict_rows(d.x())?;
    m.skill(d.y(), pred.view())
}

/// Per-row skill loss of the reduced predictions relative to the full ones.
/// Their mean is the importance estimate.
pub fn skill_differences(
    m: SkillMeasure,
    y: ArrayView1<'_, f64>,
    full: ArrayView1<'_, f64>,
    reduced: ArrayView1<'_, f64>,
) -> Vector {
    y.iter()
        .zip(full)
        .zip(reduced)
        .map(|((&t, &f), &r)| m.pointwise(t, f) - m.pointwise(t, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_points() -> Dataset {
        Dataset::new(array![[0.0], [1.0]], array![1.0, 3.0]).unwrap()
    }

    #[test]
    fn perfect_predictor_has_zero_loss() {
        let d = two_points();
        let f = PredictFn(|x: ArrayView1<'_, f64>| 1.0 + 2.0 * x[0]);
        assert_eq!(eval_skill(&f, &d, SkillMeasure::NegMse).unwrap(), 0.0);
    }

    #[test]
    fn constant_two_on_two_points() {
        let f = PredictFn(|_: ArrayView1<'_, f64>| 2.0);
        assert_eq!(eval_skill(&f, &two_points(), SkillMeasure::NegMse).unwrap(), -1.0);
    }

    #[test]
    fn half_threshold_counts_as_one() {
        let d = Dataset::new(array![[0.0], [0.0], [0.0], [0.0]], array![1.0, 0.0, 1.0, 1.0]).unwrap();
        let f = PredictFn(|_: ArrayView1<'_, f64>| 0.5);
        assert_eq!(eval_skill(&f, &d, SkillMeasure::Accuracy).unwrap(), 0.75);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let d = Dataset::new(crate::numerics::Matrix::zeros((0, 2)), Vector::zeros(0)).unwrap();
        let f = PredictFn(|_: ArrayView1<'_, f64>| 0.0);
        assert!(matches!(
            eval_skill(&f, &d, SkillMeasure::NegMse),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn differences_average_to_skill_gap() {
        let y = array![1.0, 2.0, 0.0];
        let full = array![1.1, 1.8, 0.2];
        let red = array![0.0, 0.5, 1.0];
        let t = skill_differences(SkillMeasure::NegMse, y.view(), full.view(), red.view());
        let gap = SkillMeasure::NegMse.skill(y.view(), full.view()).unwrap()
            - SkillMeasure::NegMse.skill(y.view(), red.view()).unwrap();
        assert!((t.mean().unwrap() - gap).abs() < 1e-15);
    }
}
