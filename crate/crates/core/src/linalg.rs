//! Dense linear algebra on small matrices of reals and of jets.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Relative threshold for `|det| / prod(row norms)`.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub(crate) fn to_dmatrix(m: &Tensor<f64>) -> DMatrix<f64> {
    let n = m.shape()[0];
    DMatrix::from_fn(n, n, |i, j| m[[i, j]])
}

pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Tensor<f64> {
    Tensor::from_fn(&[m.nrows(), m.ncols()], |i| m[(i[0], i[1])])
}

/// True when the square matrix is numerically singular relative to the
/// product of its row norms (the Hadamard bound on `|det|`).
pub fn is_degenerate(m: &Tensor<f64>) -> bool {
    let n = m.shape()[0];
    if n == 0 {
        return false;
    }
    let scale: f64 = (0..n)
        .map(|i| libm::sqrt((0..n).map(|j| m[[i, j]] * m[[i, j]]).sum::<f64>()))
        .product();
    if !(scale > 0.0) || !scale.is_finite() {
        return true;
    }
    let det = to_dmatrix(m).lu().determinant();
    !(libm::fabs(det) >= DEGENERACY_TOL * scale)
}

pub fn values(m: &Tensor<Jet>) -> Tensor<f64> {
    m.map_ref(Jet::value)
}

/// Inverse of a square jet matrix; `err` is returned when the value matrix is
/// degenerate.
pub fn invert_jets(m: &Tensor<Jet>, err: Error) -> Result<Tensor<Jet>> {
    let n = m.shape()[0];
    if is_degenerate(&values(m)) {
        return Err(err);
    }
    let mut a: Vec<Vec<Jet>> = (0..n).map(|i| (0..n).map(|j| m[[i, j]].clone()).collect()).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs()))
            .expect("non-empty");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].try_div(&p).map_err(|_| err.clone())?;
            inv[col][j] = inv[col][j].try_div(&p).map_err(|_| err.clone())?;
        }
        for r in 0..n {
            if r == col || a[r][col].coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let t = &f * &a[col][j];
                a[r][j] -= t;
                let t = &f * &inv[col][j];
                inv[r][j] -= t;
            }
        }
    }
    Ok(Tensor::from_fn(&[n, n], |i| inv[i[0]][i[1]].clone()))
}

/// Inverse of a real square matrix, `None` when degenerate.
pub fn invert(m: &Tensor<f64>) -> Option<Tensor<f64>> {
    if is_degenerate(m) {
        return None;
    }
    to_dmatrix(m).try_inverse().map(|i| from_dmatrix(&i))
}

/// Solves `m x = b` for a non-degenerate real matrix.
pub fn solve(m: &Tensor<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    to_dmatrix(m).lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

/// Smallest eigenvalue of a symmetric real matrix.
pub fn min_eigenvalue(m: &Tensor<f64>) -> f64 {
    let s = to_dmatrix(m);
    let sym = (&s + s.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::lift_coordinates;

    #[test]
    fn degenerate_detection_is_scale_free() {
        let m = Tensor::from_fn(&[2, 2], |i| [[1e-20, 0.0], [0.0, 1e-20]][i[0]][i[1]]);
        assert!(!is_degenerate(&m));
        let s = Tensor::from_fn(&[2, 2], |i| [[1.0, 2.0], [2.0, 4.0]][i[0]][i[1]]);
        assert!(is_degenerate(&s));
        assert!(!is_degenerate(&Tensor::zeros(&[0, 0])));
    }

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        // m(t) = [[2 + t, 1], [1, 3 - t]] along one seed
        let x = lift_coordinates(&[0.5], 2);
        let t = &x[0];
        let m = Tensor::from_fn(&[2, 2], |i| match (i[0], i[1]) {
            (0, 0) => t + 2.0,
            (1, 1) => 3.0 - t,
            _ => Jet::constant(1.0),
        });
        let inv = invert_jets(&m, Error::DegenerateMetric).unwrap();
        // m * inv = I to all orders
        for i in 0..2 {
            for j in 0..2 {
                let s = &(&m[[i, 0]] * &inv[[0, j]]) + &(&m[[i, 1]] * &inv[[1, j]]);
                assert!((s.value() - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                assert!(s.coeffs().iter().skip(1).all(|c| c.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn eigenvalue_and_solve() {
        let m = Tensor::from_fn(&[2, 2], |i| [[2.0, 1.0], [1.0, 2.0]][i[0]][i[1]]);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-14);
        let x = solve(&m, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(invert(&m).is_some());
    }
}
