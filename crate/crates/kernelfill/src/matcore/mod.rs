//! Dense symmetric linear algebra: storage, eigendecomposition, inversion,
//! log-determinant, positive-definiteness checks and block partitioning.
//!
//! Everything here is a pure function over immutable values; nothing keeps
//! global state, so all types are safe to share across threads.

mod dense;
mod eigen;

pub(crate) use dense::solve_linear;
pub use dense::Matrix;
pub use eigen::{eig, EigenDecomposition};

use crate::error::{Error, Result};

/// Eigenvalue ratio below which a matrix is treated as rank-deficient rather
/// than positive definite. Relative to the largest eigenvalue.
pub const PD_RATIO_THRESHOLD: f64 = 1e-12;

/// Dense square symmetric matrix. Only the upper triangle is stored, so
/// `get(i, j) == get(j, i)` holds exactly by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    // Upper triangle, row-major: (i, j) with i <= j at offset(i) + j - i.
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be at least 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Fills the upper triangle with `f(i, j)`, called once per `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Ingests possibly-asymmetric external data by symmetrizing
    /// `(A + A^T) / 2`. Returns the matrix together with the largest
    /// absolute asymmetry `|a_ij - a_ji|` found, so callers can warn when it
    /// exceeds their tolerance.
    pub fn symmetrized(rows: &[Vec<f64>]) -> Result<(Self, f64)> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidInput("empty matrix".to_string()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "matrix is not square: {} rows",
                dim
            )));
        }
        let mut asymmetry = 0.0_f64;
        let m = SymMatrix::from_fn(dim, |i, j| {
            asymmetry = asymmetry.max((rows[i][j] - rows[j][i]).abs());
            0.5 * (rows[i][j] + rows[j][i])
        });
        Ok((m, asymmetry))
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.dim && j < self.dim);
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.dim - r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.data[idx] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `A + eps * I`.
    pub fn add_scaled_identity(&self, eps: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            let v = out.get(i, i) + eps;
            out.set(i, i, v);
        }
        out
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> SymMatrix {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= factor;
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `v^T A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let av = self.mul_vec(v);
        v.iter().zip(&av).map(|(a, b)| a * b).sum()
    }

    /// `tr(A B)` for symmetric `A`, `B` of equal dimension.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.get(i, i) * other.get(i, i);
            for j in i + 1..self.dim {
                acc += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    /// `A * B` with `B` rectangular (`dim x k` result).
    pub fn mul_dense(&self, other: &Matrix) -> Matrix {
        assert_eq!(other.rows(), self.dim);
        Matrix::from_fn(self.dim, other.cols(), |i, j| {
            (0..self.dim)
                .map(|k| self.get(i, k) * other.get(k, j))
                .sum()
        })
    }
}

/// Visible/hidden block split of a symmetric matrix: `vv` is the leading
/// `n x n` block, `vh` the off-diagonal `n x m` block and `hh` the trailing
/// `m x m` block.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    pub vv: SymMatrix,
    pub vh: Matrix,
    pub hh: SymMatrix,
}

impl BlockPartition {
    pub fn visible_count(&self) -> usize {
        self.vv.dim()
    }

    pub fn hidden_count(&self) -> usize {
        self.hh.dim()
    }
}

/// Splits `a` into blocks at row/column `n` (`1 <= n < dim`).
pub fn partition(a: &SymMatrix, n: usize) -> Result<BlockPartition> {
    let d = a.dim();
    if n == 0 || n >= d {
        return Err(Error::InvalidInput(format!(
            "partition point {n} out of range for dimension {d}"
        )));
    }
    let m = d - n;
    let vv = SymMatrix::from_fn(n, |i, j| a.get(i, j));
    let vh = Matrix::from_fn(n, m, |i, j| a.get(i, n + j));
    let hh = SymMatrix::from_fn(m, |i, j| a.get(n + i, n + j));
    Ok(BlockPartition { vv, vh, hh })
}

/// Reassembles a partition into the full matrix. Exact inverse of
/// [`partition`]: every entry is a plain copy.
pub fn assemble(p: &BlockPartition) -> SymMatrix {
    let n = p.visible_count();
    let m = p.hidden_count();
    SymMatrix::from_fn(n + m, |i, j| {
        if j < n {
            p.vv.get(i, j)
        } else if i < n {
            p.vh.get(i, j - n)
        } else {
            p.hh.get(i - n, j - n)
        }
    })
}

/// Applies an index permutation to rows and columns:
/// `result[i][j] = a[perm[i]][perm[j]]`.
pub fn permute_symmetric(a: &SymMatrix, perm: &[usize]) -> Result<SymMatrix> {
    let d = a.dim();
    if perm.len() != d {
        return Err(Error::InvalidInput(format!(
            "permutation length {} does not match dimension {}",
            perm.len(),
            d
        )));
    }
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::InvalidInput(
                "permutation is not a bijection".to_string(),
            ));
        }
        seen[p] = true;
    }
    Ok(SymMatrix::from_fn(d, |i, j| a.get(perm[i], perm[j])))
}

/// Inverts the permutation: `out[perm[i]] = i`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Eigendecomposition plus the positive-definiteness gate: errors unless
/// every eigenvalue exceeds `PD_RATIO_THRESHOLD` times the largest.
pub(crate) fn eig_pd(a: &SymMatrix) -> Result<EigenDecomposition> {
    let dec = eig(a)?;
    let largest = dec.eigenvalues[0];
    let smallest = *dec.eigenvalues.last().expect("dim >= 1");
    if largest <= 0.0 || smallest <= PD_RATIO_THRESHOLD * largest {
        return Err(Error::NotPositiveDefinite(format!(
            "eigenvalue range [{smallest:.6e}, {largest:.6e}]"
        )));
    }
    Ok(dec)
}

pub(crate) fn is_positive_definite(a: &SymMatrix) -> bool {
    eig_pd(a).is_ok()
}

/// Inverse of a positive definite matrix via its eigendecomposition. The
/// result is symmetric by construction.
pub fn inverse(a: &SymMatrix) -> Result<SymMatrix> {
    let dec = eig(a)?;
    let largest = dec.eigenvalues[0];
    let smallest = *dec.eigenvalues.last().expect("dim >= 1");
    let ratio = if largest > 0.0 {
        smallest / largest
    } else {
        f64::NEG_INFINITY
    };
    if largest <= 0.0 || ratio <= PD_RATIO_THRESHOLD {
        return Err(Error::SingularMatrix { ratio });
    }
    Ok(inverse_from_eigen(&dec))
}

pub(crate) fn inverse_from_eigen(dec: &EigenDecomposition) -> SymMatrix {
    let d = dec.eigenvalues.len();
    SymMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| dec.eigenvectors.get(i, k) * dec.eigenvectors.get(j, k) / dec.eigenvalues[k])
            .sum()
    })
}

/// `log det A = sum_i log mu_i` over the eigenvalues of a positive definite
/// matrix. Computed through the spectrum, never through determinant
/// products, so it does not overflow for large dimensions.
pub fn log_det(a: &SymMatrix) -> Result<f64> {
    let dec = eig_pd(a)?;
    Ok(dec.eigenvalues.iter().map(|v| v.ln()).sum())
}
