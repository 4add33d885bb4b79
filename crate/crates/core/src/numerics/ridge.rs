//! Ridge regression of a residual vector on a feature matrix,
//!
//! `argmin_w (1/n) sum_i (e_i - w^T phi_i)^2 + lambda |w|^2`,
//!
//! solved through the primal normal equations `(Phi^T Phi + n lambda I) w = Phi^T e`
//! when there are no more features than rows, otherwise through the kernel
//! form `w = Phi^T (Phi Phi^T + n lambda I)^{-1} e`.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::linalg::{
    add_diagonal, cholesky, cholesky_owned, cholesky_solve, gram, is_finite, outer_gram, Matrix, Vector,
};
use crate::error::{Error, Result};

fn check_inputs<F: FeatureMatrix + ?Sized>(phi: &F, e: ArrayView1<'_, f64>, lambda: f64) -> Result<()> {
    if phi.nrows() != e.len() {
        return Err(Error::DimensionMismatch {
            what: "residual length vs feature rows",
            expected: phi.nrows(),
            got: e.len(),
        });
    }
    if phi.nrows() == 0 || phi.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "ridge needs at least one row and one column".into(),
        ));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::OutOfRange {
            what: "ridge penalty",
            value: lambda,
        });
    }
    if !phi.all_finite() {
        return Err(Error::NonFiniteInput("ridge feature matrix"));
    }
    if !is_finite(e.iter()) {
        return Err(Error::NonFiniteInput("ridge residuals"));
    }
    Ok(())
}

/// Minimiser of the penalised least-squares objective; picks the cheaper of
/// the primal and dual paths.
pub fn ridge_solve(phi: &Matrix, e: &Vector, lambda: f64) -> Result<Vector> {
    if phi.ncols() <= phi.nrows() {
        ridge_solve_primal(phi, e, lambda)
    } else {
        ridge_solve_dual(phi, e, lambda)
    }
}

pub fn ridge_solve_primal(phi: &Matrix, e: &Vector, lambda: f64) -> Result<Vector> {
    check_inputs(phi, e.view(), lambda)?;
    let n = phi.nrows() as f64;
    let mut g = gram(phi.view());
    add_diagonal(&mut g, n * lambda);
    let rhs = phi.t().dot(e);
    let l = cholesky(&g)?;
    Ok(cholesky_solve(&l, rhs.view()))
}

pub fn ridge_solve_dual(phi: &Matrix, e: &Vector, lambda: f64) -> Result<Vector> {
    check_inputs(phi, e.view(), lambda)?;
    let n = phi.nrows() as f64;
    let mut k = outer_gram(phi.view());
    add_diagonal(&mut k, n * lambda);
    let l = cholesky(&k)?;
    let alpha = cholesky_solve(&l, e.view());
    Ok(phi.t().dot(&alpha))
}

/// Feature matrix seen through the products the ridge solvers need, so that
/// structured features never have to be materialised densely.
pub trait FeatureMatrix {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Dense copy of the listed rows.
    fn select_rows(&self, rows: &[usize]) -> Matrix;
    /// `Phi Phi^T`.
    fn kernel(&self) -> Matrix;
    /// `Phi^T v`.
    fn t_dot(&self, v: ArrayView1<'_, f64>) -> Vector;
    fn all_finite(&self) -> bool;
}

impl FeatureMatrix for ArrayView2<'_, f64> {
    fn nrows(&self) -> usize {
        self.len_of(Axis(0))
    }

    fn ncols(&self) -> usize {
        self.len_of(Axis(1))
    }

    fn select_rows(&self, rows: &[usize]) -> Matrix {
        self.select(Axis(0), rows)
    }

    fn kernel(&self) -> Matrix {
        outer_gram(*self)
    }

    fn t_dot(&self, v: ArrayView1<'_, f64>) -> Vector {
        self.t().dot(&v)
    }

    fn all_finite(&self) -> bool {
        is_finite(self.iter())
    }
}

impl FeatureMatrix for Array2<f64> {
    fn nrows(&self) -> usize {
        self.len_of(Axis(0))
    }

    fn ncols(&self) -> usize {
        self.len_of(Axis(1))
    }

    fn select_rows(&self, rows: &[usize]) -> Matrix {
        self.select(Axis(0), rows)
    }

    fn kernel(&self) -> Matrix {
        outer_gram(self.view())
    }

    fn t_dot(&self, v: ArrayView1<'_, f64>) -> Vector {
        self.t().dot(&v)
    }

    fn all_finite(&self) -> bool {
        is_finite(self.iter())
    }
}

fn check_partition(n: usize, parts: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; n];
    for &r in parts.iter().flatten() {
        if r >= n || seen[r] {
            return Err(Error::InvalidArgument("row partition overlaps or overflows".into()));
        }
        seen[r] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("row partition does not cover every row".into()));
    }
    Ok(())
}

/// Ridge problems over a partition of the rows (cross-validation folds):
/// all rows, or all rows but one part. The dual form is used whenever `Phi`
/// is wider than the smallest row subset that will be solved. In the primal
/// form the Gram matrix is accumulated from per-part blocks, so every row's
/// outer product is formed exactly once.
#[derive(Debug, Clone)]
pub struct PartitionedRidge<'a, F: ?Sized> {
    phi: &'a F,
    e: ArrayView1<'a, f64>,
    parts: Vec<Vec<usize>>,
    form: PartForm,
}

#[derive(Debug, Clone)]
enum PartForm {
    Primal {
        gram: Matrix,
        rhs: Vector,
        blocks: Vec<(Matrix, Vector)>,
    },
    Dual {
        kernel: Matrix,
    },
}

impl<'a, F: FeatureMatrix + ?Sized> PartitionedRidge<'a, F> {
    /// `parts` must be disjoint and cover every row. A single part stands
    /// for the plain problem on all rows.
    pub fn new(phi: &'a F, e: ArrayView1<'a, f64>, parts: Vec<Vec<usize>>) -> Result<Self> {
        check_inputs(phi, e, 1.0)?;
        let n = phi.nrows();
        check_partition(n, &parts)?;
        let smallest_fit = if parts.len() == 1 {
            n
        } else {
            n - parts.iter().map(Vec::len).max().unwrap_or(0)
        };
        let form = if phi.ncols() <= smallest_fit {
            let m = phi.ncols();
            let mut total = Matrix::zeros((m, m));
            let mut rhs = Vector::zeros(m);
            let mut blocks = Vec::with_capacity(parts.len());
            for rows in &parts {
                let phi_p = phi.select_rows(rows);
                let e_p = e.select(Axis(0), rows);
                let g = gram(phi_p.view());
                let r = phi_p.t().dot(&e_p);
                total += &g;
                rhs += &r;
                blocks.push((g, r));
            }
            PartForm::Primal {
                gram: total,
                rhs,
                blocks,
            }
        } else {
            PartForm::Dual { kernel: phi.kernel() }
        };
        Ok(Self { phi, e, parts, form })
    }

    /// The plain problem on all rows.
    pub fn single(phi: &'a F, e: ArrayView1<'a, f64>) -> Result<Self> {
        let rows = (0..phi.nrows()).collect();
        Self::new(phi, e, vec![rows])
    }

    pub fn is_primal(&self) -> bool {
        matches!(self.form, PartForm::Primal { .. })
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn part(&self, k: usize) -> &[usize] {
        &self.parts[k]
    }

    pub fn full(&self) -> RidgeSubproblem<'a, F> {
        let rows: Vec<usize> = (0..self.phi.nrows()).collect();
        let system = match &self.form {
            PartForm::Primal { gram, rhs, .. } => SubSystem::Primal {
                gram: gram.clone(),
                rhs: rhs.clone(),
            },
            PartForm::Dual { kernel } => SubSystem::Dual { kernel: kernel.clone() },
        };
        RidgeSubproblem {
            phi: self.phi,
            e: self.e,
            rows,
            system,
        }
    }

    /// Problem on every row outside part `k`.
    pub fn without_part(&self, k: usize) -> RidgeSubproblem<'a, F> {
        let mut keep = vec![true; self.phi.nrows()];
        for &r in &self.parts[k] {
            keep[r] = false;
        }
        let rows: Vec<usize> = (0..self.phi.nrows()).filter(|&i| keep[i]).collect();
        let system = match &self.form {
            PartForm::Primal { gram, rhs, blocks } => SubSystem::Primal {
                gram: gram - &blocks[k].0,
                rhs: rhs - &blocks[k].1,
            },
            PartForm::Dual { kernel } => SubSystem::Dual {
                kernel: kernel.select(Axis(0), &rows).select(Axis(1), &rows),
            },
        };
        RidgeSubproblem {
            phi: self.phi,
            e: self.e,
            rows,
            system,
        }
    }
}

#[derive(Debug, Clone)]
enum SubSystem {
    Primal { gram: Matrix, rhs: Vector },
    Dual { kernel: Matrix },
}

/// Ridge problem over a fixed row subset, solvable for any penalty.
#[derive(Debug, Clone)]
pub struct RidgeSubproblem<'a, F: ?Sized> {
    phi: &'a F,
    e: ArrayView1<'a, f64>,
    rows: Vec<usize>,
    system: SubSystem,
}

impl<F: FeatureMatrix + ?Sized> RidgeSubproblem<'_, F> {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn solve(&self, lambda: f64) -> Result<Vector> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::OutOfRange {
                what: "ridge penalty",
                value: lambda,
            });
        }
        let n = self.rows.len() as f64;
        match &self.system {
            SubSystem::Primal { gram, rhs } => {
                let mut g = gram.clone();
                add_diagonal(&mut g, n * lambda);
                let l = cholesky_owned(g)?;
                Ok(cholesky_solve(&l, rhs.view()))
            }
            SubSystem::Dual { kernel } => {
                let mut k = kernel.clone();
                add_diagonal(&mut k, n * lambda);
                let l = cholesky_owned(k)?;
                let e = self.e.select(Axis(0), &self.rows);
                let alpha = cholesky_solve(&l, e.view());
                // zero weight on rows outside the subset
                let mut padded = Vector::zeros(self.phi.nrows());
                for (&r, &a) in self.rows.iter().zip(alpha.iter()) {
                    padded[r] = a;
                }
                Ok(self.phi.t_dot(padded.view()))
            }
        }
    }
}
