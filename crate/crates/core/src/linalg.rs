//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative eigenvalue cutoff used by [`pseudo_solve`].
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-10;

/// Minimum-norm solution of `a x = b` for symmetric positive semidefinite `a`.
///
/// Eigen-directions with eigenvalue at or below `1e-10 * max eigenvalue`
/// contribute nothing, so a zero matrix yields a zero vector. Returns the
/// solution and the numerical rank.
pub fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let k = b.len();
    if k == 0 {
        return (DVector::zeros(0), 0);
    }
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut x = DVector::zeros(k);
    let mut rank = 0;
    if max <= 0.0 || !max.is_finite() {
        return (x, rank);
    }
    let cutoff = PSEUDO_INVERSE_CUTOFF * max;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            x += v * (v.dot(b) / lambda);
            rank += 1;
        }
    }
    (x, rank)
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when the
/// smallest is not positive.
pub fn symmetric_condition(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `v^T m v`
pub fn quadratic_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}
