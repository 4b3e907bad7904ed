//! Dense helpers for the tiny symmetric eigenproblems the DLT needs.
//!
//! The design matrix of the homography DLT is `2n x 9`; its smallest singular
//! vector is the eigenvector of the 9x9 normal matrix `AᵀA` for the smallest
//! eigenvalue. A cyclic Jacobi iteration on such a small symmetric matrix is
//! exact to machine precision and keeps the crate free of heavyweight linear
//! algebra dependencies.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub(crate) struct SymEigen {
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `j` is the eigenvector for `values[j]`.
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n x n` matrix (row-major).
pub(crate) fn sym_eigen(n: usize, matrix: &[f64]) -> SymEigen {
    debug_assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let norm: f64 = math::sqrt(a.iter().map(|x| x * x).sum());
    let tol = 1e-15 * norm.max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if math::sqrt(off) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if math::abs(apq) <= tol / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + math::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = vec![0.0f64; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        values.push(a[old_col * n + old_col]);
        for row in 0..n {
            vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    SymEigen { values, vectors }
}
