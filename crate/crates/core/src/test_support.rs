use ndarray::{concatenate, ArrayView1, ArrayView2, Axis};

use crate::numerics::{gram, solve_spd, Matrix, Vector};

/// Least squares by normal equations, optionally with a trailing intercept.
pub fn ols(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>, intercept: bool) -> Vector {
    let design = design(x, intercept);
    let lhs = gram(design.view());
    let rhs = design.t().dot(&y);
    solve_spd(&lhs, rhs.view()).expect("full-rank design")
}

pub fn design(x: ArrayView2<'_, f64>, intercept: bool) -> Matrix {
    if intercept {
        let ones = Matrix::ones((x.nrows(), 1));
        concatenate(Axis(1), &[x, ones.view()]).unwrap()
    } else {
        x.to_owned()
    }
}

pub fn correlation(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let ma = a.mean().unwrap();
    let mb = b.mean().unwrap();
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
