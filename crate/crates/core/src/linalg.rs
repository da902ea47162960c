//! Small dense-matrix helpers.
//!
//! Matrix products are written as explicit row-dot loops so that the
//! floating-point reduction order is fixed: evaluating a batch row-by-row
//! and evaluating the whole batch produce bitwise-identical results, and a
//! fixed seed reproduces a run exactly on one platform.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// `a · b` for (m×k) and (k×n).
pub fn matmul(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let (m, k) = a.dim();
    let (kb, n) = b.dim();
    assert_eq!(k, kb, "matmul inner dims: {k} vs {kb}");
    let bt = b.t();
    let mut out = Array2::zeros((m, n));
    for i in 0..m {
        let arow = a.row(i);
        for j in 0..n {
            out[[i, j]] = dot(&arow, &bt.row(j));
        }
    }
    out
}

/// Fixed-order dot product (plain left-to-right accumulation).
pub fn dot(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Cholesky factorization `a = L·Lᵀ` (lower triangular); `None` when the
/// matrix is not symmetric positive definite.
pub fn cholesky(a: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                // rejects non-positive pivots and NaN alike
                if sum.is_nan() || sum <= 0.0 {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solve `L·x = b` with `L` lower triangular.
pub fn solve_lower(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solve `Lᵀ·x = b` with `L` lower triangular.
pub fn solve_lower_t(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor,
/// solving against the identity column by column.
pub fn spd_inverse(a: &ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut inv = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::zeros(n);
        e[j] = 1.0;
        let y = solve_lower(&l.view(), &e.view());
        let x = solve_lower_t(&l.view(), &y.view());
        inv.column_mut(j).assign(&x);
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matmul_hand() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[5.0, 6.0], [7.0, 8.0]];
        let c = matmul(&a.view(), &b.view());
        assert_eq!(c, array![[19.0, 22.0], [43.0, 50.0]]);
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = array![[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]];
        let l = cholesky(&a.view()).unwrap();
        let back = matmul(&l.view(), &l.t());
        for (x, y) in a.iter().zip(back.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a.view()).is_none());
    }

    #[test]
    fn spd_inverse_identity() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let inv = spd_inverse(&a.view()).unwrap();
        let prod = matmul(&a.view(), &inv.view());
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - want).abs() < 1e-12);
            }
        }
    }
}
