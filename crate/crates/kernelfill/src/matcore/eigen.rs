//! Cyclic Jacobi eigendecomposition for symmetric matrices.
//!
//! Deterministic by construction: fixed sweep order, fixed sign convention
//! (the largest-magnitude component of every eigenvector is positive), so a
//! given input always produces bit-identical output.

use super::dense::Matrix;
use super::SymMatrix;
use crate::error::{Error, Result};

/// Relative off-diagonal mass at which a sweep is declared converged.
const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues sorted descending with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// Rebuilds `sum_i lambda_i v_i v_i^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.eigenvalues.len();
        SymMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| {
                    self.eigenvalues[k] * self.eigenvectors.get(i, k) * self.eigenvectors.get(j, k)
                })
                .sum()
        })
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidInput(
            "matrix has non-finite entries".to_string(),
        ));
    }
    let d = a.dim();
    let mut work: Vec<f64> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            work.push(a.get(i, j));
        }
    }
    let mut vecs = vec![0.0; d * d];
    for i in 0..d {
        vecs[i * d + i] = 1.0;
    }

    for _sweep in 0..MAX_SWEEPS {
        let mut off_sq = 0.0;
        let mut diag_sq = 0.0;
        for p in 0..d {
            diag_sq += work[p * d + p] * work[p * d + p];
            for q in p + 1..d {
                off_sq += work[p * d + q] * work[p * d + q];
            }
        }
        if (2.0 * off_sq).sqrt() <= OFF_DIAG_TOL * diag_sq.sqrt() {
            break;
        }
        for p in 0..d.saturating_sub(1) {
            for q in p + 1..d {
                let apq = work[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = work[p * d + p];
                let aqq = work[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                work[p * d + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                work[q * d + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                work[p * d + q] = 0.0;
                work[q * d + p] = 0.0;
                for i in 0..d {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = work[i * d + p];
                    let aiq = work[i * d + q];
                    work[i * d + p] = c * aip - s * aiq;
                    work[p * d + i] = work[i * d + p];
                    work[i * d + q] = s * aip + c * aiq;
                    work[q * d + i] = work[i * d + q];
                }
                for i in 0..d {
                    let vip = vecs[i * d + p];
                    let viq = vecs[i * d + q];
                    vecs[i * d + p] = c * vip - s * viq;
                    vecs[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }

    let raw_values: Vec<f64> = (0..d).map(|i| work[i * d + i]).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| raw_values[j].total_cmp(&raw_values[i]).then(i.cmp(&j)));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = Matrix::zeros(d, d);
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(raw_values[src]);
        let mut column: Vec<f64> = (0..d).map(|i| vecs[i * d + src]).collect();
        let mut arg_max = 0;
        for (i, v) in column.iter().enumerate() {
            if v.abs() > column[arg_max].abs() {
                arg_max = i;
            }
        }
        if column[arg_max] < 0.0 {
            for v in column.iter_mut() {
                *v = -*v;
            }
        }
        for (i, v) in column.iter().enumerate() {
            eigenvectors.set(i, col, *v);
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}
