//! Thin wrappers around the dense symmetric/Hermitian eigensolvers.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIG_ITERATION_CAP: usize = 30;

fn no_convergence(n: usize) -> Error {
    Error::Convergence {
        what: "symmetric eigensolver",
        iterations: EIG_ITERATION_CAP * n.max(1),
    }
}

pub(crate) fn to_mat(data: &[f64], n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| data[i * n + j])
}

/// Eigenvalues ascending of a row-major symmetric matrix.
pub(crate) fn sym_eigenvalues(data: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    to_mat(data, n)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| no_convergence(n))
}

/// Eigenvalues ascending and eigenvectors as row-major columns
/// (`vectors[i * n + k]` is component i of eigenvector k).
pub(crate) fn sym_eigen(data: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let evd = to_mat(data, n)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| no_convergence(n))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|k| s[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            vectors[i * n + k] = u[(i, k)];
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues ascending of a row-major Hermitian matrix.
pub(crate) fn herm_eigenvalues(data: &[Complex64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Mat::<Complex64>::from_fn(n, n, |i, j| data[i * n + j])
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| no_convergence(n))
}

/// Row-major C = Aᵀ A for a row-major `rows × cols` matrix A.
pub(crate) fn gram_of_columns(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let m = Mat::from_fn(rows, cols, |i, j| a[i * cols + j]);
    let g = m.transpose() * &m;
    let mut out = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in 0..=i {
            // symmetrize exactly
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            out[i * cols + j] = v;
            out[j * cols + i] = v;
        }
    }
    out
}

/// max_k ‖A v_k − λ_k v_k‖ / ‖A‖₂ for an eigendecomposition from [`sym_eigen`].
pub(crate) fn eigen_residual(data: &[f64], n: usize, values: &[f64], vectors: &[f64]) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let a = to_mat(data, n);
    let v = Mat::from_fn(n, n, |i, k| vectors[i * n + k]);
    let av = &a * &v;
    let norm = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm == 0.0 {
        return 0.0;
    }
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (av[(i, k)] - values[k] * v[(i, k)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
        / norm
}
