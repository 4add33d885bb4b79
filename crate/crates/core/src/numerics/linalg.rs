use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor as llt;
use faer::{MatMut, Par};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Row-major dense matrix.
pub type Matrix = Array2<f64>;
pub type Vector = Array1<f64>;

/// Diagonal pivots at or below this fraction of the largest diagonal entry
/// are treated as a loss of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOLERANCE: f64 = 1e-10;

pub fn is_finite<'a, I: IntoIterator<Item = &'a f64>>(values: I) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

/// `A^T A` for an `n x m` matrix, computed with a single GEMM.
pub fn gram(a: ArrayView2<'_, f64>) -> Matrix {
    a.t().dot(&a)
}

/// `A A^T` for an `n x m` matrix.
pub fn outer_gram(a: ArrayView2<'_, f64>) -> Matrix {
    a.dot(&a.t())
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
///
/// Fails if `A` is not symmetric to within a relative `1e-10`, or if a pivot
/// falls to [`PIVOT_TOLERANCE`] times the largest diagonal entry or below.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    cholesky_owned(a.as_standard_layout().into_owned())
}

/// [`cholesky`] reusing the storage of `a`.
pub(crate) fn cholesky_owned(a: Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "cholesky expects a square matrix",
            expected: n,
            got: a.ncols(),
        });
    }
    if !is_finite(a.iter()) {
        return Err(Error::NonFiniteInput("cholesky input"));
    }
    let mut l = if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    };
    let buf = l.as_slice_mut().expect("standard layout");
    let (mut scale, mut max_gap) = (1.0f64, 0.0f64);
    for_lower_pairs(n, |i, j| {
        let (lower, upper) = (buf[i * n + j], buf[j * n + i]);
        scale = scale.max(lower.abs()).max(upper.abs());
        max_gap = max_gap.max((lower - upper).abs());
    });
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(buf[i * n + i].abs()));
    scale = scale.max(max_diag);
    if max_gap > SYMMETRY_TOLERANCE * scale {
        // report the first offending entry in row-major order
        for i in 0..n {
            for j in 0..i {
                let gap = (buf[i * n + j] - buf[j * n + i]).abs();
                if gap > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
    }
    let tol = PIVOT_TOLERANCE * max_diag.max(f64::MIN_POSITIVE);

    // The row-major buffer read column-major is A^T = A, so factoring its
    // lower half leaves L^T in the upper half of the row-major matrix.
    let mut stack = MemBuffer::new(llt::cholesky_in_place_scratch::<f64>(n, Par::Seq, Default::default()));
    let factored = llt::cholesky_in_place(
        MatMut::from_column_major_slice_mut(buf, n, n),
        Default::default(),
        Par::Seq,
        MemStack::new(&mut stack),
        Default::default(),
    );
    let stopped_at = match factored {
        Ok(_) => None,
        Err(llt::LltError::NonPositivePivot { index }) => Some(index),
    };
    for i in 0..stopped_at.unwrap_or(n) {
        let pivot = buf[i * n + i] * buf[i * n + i];
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { index: i, pivot });
        }
    }
    if let Some(index) = stopped_at {
        return Err(Error::NotPositiveDefinite { index, pivot: f64::NAN });
    }
    for_lower_pairs(n, |i, j| {
        buf[i * n + j] = buf[j * n + i];
        buf[j * n + i] = 0.0;
    });
    Ok(l)
}

/// Visits every `(i, j)` with `j < i` in square tiles, so the mirrored
/// accesses `(j, i)` stay in cache.
fn for_lower_pairs(n: usize, mut visit: impl FnMut(usize, usize)) {
    const TILE: usize = 32;
    for i0 in (0..n).step_by(TILE) {
        for j0 in (0..=i0).step_by(TILE) {
            for i in i0..(i0 + TILE).min(n) {
                for j in j0..(j0 + TILE).min(i) {
                    visit(i, j);
                }
            }
        }
    }
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: ArrayView1<'_, f64>) -> Vector {
    let n = l.nrows();
    let l = l.as_standard_layout();
    let buf = l.as_slice().expect("standard layout");
    let mut x = b.to_vec();
    for i in 0..n {
        let row = &buf[i * n..i * n + i];
        let acc = x[i] - row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum::<f64>();
        x[i] = acc / buf[i * n + i];
    }
    Vector::from(x)
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: ArrayView1<'_, f64>) -> Vector {
    let n = l.nrows();
    let l = l.as_standard_layout();
    let buf = l.as_slice().expect("standard layout");
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        x[i] /= buf[i * n + i];
        let xi = x[i];
        // column i of L^T is row i of L
        for (xk, lik) in x[..i].iter_mut().zip(&buf[i * n..i * n + i]) {
            *xk -= lik * xi;
        }
    }
    Vector::from(x)
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve(l: &Matrix, b: ArrayView1<'_, f64>) -> Vector {
    let y = solve_lower(l, b);
    solve_lower_transpose(l, y.view())
}

pub fn solve_spd(a: &Matrix, b: ArrayView1<'_, f64>) -> Result<Vector> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Adds `value` to every diagonal entry in place.
pub(crate) fn add_diagonal(a: &mut Matrix, value: f64) {
    for d in a.diag_mut() {
        *d += value;
    }
}
