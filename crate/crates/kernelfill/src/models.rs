//! Model manifolds: spectral variants of a base matrix, general harmonic
//! mixtures, and the Jordan-algebra span test that decides when the
//! m-projection onto a mixture manifold has an analytic solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{eig, solve_linear, Matrix, SymMatrix, PD_RATIO_THRESHOLD};

/// Spectral variants of a base matrix: all matrices sharing the base's
/// eigenvectors, parameterized by reciprocal coefficients `b` so that the
/// represented point is `(sum_j b_j v_j v_j^T)^{-1} = sum_j (1/b_j) v_j v_j^T`.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    base_eigvecs: Matrix,
    coeffs: Vec<f64>,
    /// `eps` added to the base matrix diagonal before decomposition, when the
    /// raw base was numerically rank-deficient.
    applied_regularization: Option<f64>,
}

impl SpectralModel {
    /// Builds a model from an explicit orthonormal eigenvector basis and
    /// positive coefficients. The basis must be square (a complete basis) and
    /// orthonormal within `1e-8`.
    pub fn new(base_eigvecs: Matrix, coeffs: Vec<f64>) -> Result<Self> {
        let d = base_eigvecs.rows();
        if base_eigvecs.cols() != d {
            return Err(Error::InvalidInput(
                "eigenvector basis must be square (complete)".to_string(),
            ));
        }
        if coeffs.len() != d {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for {} eigenvectors",
                coeffs.len(),
                d
            )));
        }
        for (j, &b) in coeffs.iter().enumerate() {
            if !(b > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "coefficient b[{j}] = {b} must be positive"
                )));
            }
        }
        for i in 0..d {
            for j in i..d {
                let dot: f64 = (0..d)
                    .map(|k| base_eigvecs.get(k, i) * base_eigvecs.get(k, j))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-8 {
                    return Err(Error::InvalidInput(format!(
                        "basis is not orthonormal: <v{i}, v{j}> = {dot}"
                    )));
                }
            }
        }
        Ok(SpectralModel {
            base_eigvecs,
            coeffs,
            applied_regularization: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.base_eigvecs.rows()
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.base_eigvecs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn applied_regularization(&self) -> Option<f64> {
        self.applied_regularization
    }

    /// Same eigenvectors, new coefficients.
    pub fn with_coefficients(&self, coeffs: Vec<f64>) -> Result<Self> {
        let mut model = SpectralModel::new(self.base_eigvecs.clone(), coeffs)?;
        model.applied_regularization = self.applied_regularization;
        Ok(model)
    }

    /// Relabels the underlying samples: row `i` of every eigenvector becomes
    /// row `perm[i]` of the old basis. Used to undo the internal
    /// missing-last ordering of the completion driver.
    pub(crate) fn with_permuted_rows(&self, perm: &[usize]) -> Result<Self> {
        let d = self.dim();
        if perm.len() != d {
            return Err(Error::InvalidInput(
                "permutation length does not match model dimension".to_string(),
            ));
        }
        let vecs = Matrix::from_fn(d, d, |i, j| self.base_eigvecs.get(perm[i], j));
        let mut model = SpectralModel::new(vecs, self.coeffs.clone())?;
        model.applied_regularization = self.applied_regularization;
        Ok(model)
    }

    /// The represented matrix `sum_j (1/b_j) v_j v_j^T`. Positive definite by
    /// the coefficient invariant, with eigenvalues exactly `{1/b_j}`.
    pub fn materialize(&self) -> SymMatrix {
        let d = self.dim();
        SymMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| self.base_eigvecs.get(i, k) * self.base_eigvecs.get(j, k) / self.coeffs[k])
                .sum()
        })
    }

    /// The inverse point `sum_j b_j v_j v_j^T` (no matrix inversion needed).
    pub fn materialize_inverse(&self) -> SymMatrix {
        let d = self.dim();
        SymMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| self.base_eigvecs.get(i, k) * self.base_eigvecs.get(j, k) * self.coeffs[k])
                .sum()
        })
    }
}

/// Harmonic mixture of arbitrary symmetric bases:
/// `M = (sum_j b_j N_j)^{-1}`, coefficients unconstrained in sign as long as
/// the weighted sum stays positive definite.
#[derive(Debug, Clone)]
pub struct HarmonicMixture {
    bases: Vec<SymMatrix>,
    coeffs: Vec<f64>,
}

impl HarmonicMixture {
    pub fn new(bases: Vec<SymMatrix>, coeffs: Vec<f64>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::InvalidInput("no basis matrices".to_string()));
        }
        if bases.len() != coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for {} bases",
                coeffs.len(),
                bases.len()
            )));
        }
        let d = bases[0].dim();
        if bases.iter().any(|b| b.dim() != d) {
            return Err(Error::InvalidInput(
                "basis matrices have mixed dimensions".to_string(),
            ));
        }
        Ok(HarmonicMixture { bases, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    pub fn bases(&self) -> &[SymMatrix] {
        &self.bases
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn with_coefficients(&self, coeffs: Vec<f64>) -> Result<Self> {
        HarmonicMixture::new(self.bases.clone(), coeffs)
    }

    /// The coefficient-weighted sum `sum_j b_j N_j` (the inverse of the
    /// represented point).
    pub fn weighted_sum(&self) -> SymMatrix {
        let d = self.dim();
        SymMatrix::from_fn(d, |i, j| {
            self.bases
                .iter()
                .zip(&self.coeffs)
                .map(|(base, &b)| b * base.get(i, j))
                .sum()
        })
    }

    /// The represented matrix. Errors when the weighted sum is not positive
    /// definite, which mixed-sign coefficients can cause.
    pub fn materialize(&self) -> Result<SymMatrix> {
        let sum = self.weighted_sum();
        crate::matcore::inverse(&sum)
            .map_err(|_| Error::NotPositiveDefinite("mixture weighted sum is not PD".to_string()))
    }
}

/// Outcome of the doubly-autoparallel span test.
///
/// Reports the span condition `N_i * N_j ∈ span{N_k}` only; the underlying
/// theorem additionally assumes the identity matrix belongs to the manifold,
/// which callers needing its full force must confirm separately.
#[derive(Debug, Clone, Serialize)]
pub struct AutoparallelReport {
    pub is_doubly_autoparallel: bool,
    pub worst_residual: f64,
    pub witness_pair: (usize, usize),
}

/// Builds the spectral-variant model of a base matrix: eigenvectors from its
/// decomposition, coefficients `b_i = 1/lambda_i` so the model initially
/// materializes back to the base.
///
/// A numerically rank-deficient base is shifted by `eps * I` with
/// `eps = 1e-8 * tr(K_B) / dim` before use; the applied shift is recorded on
/// the model.
pub fn spectral_model_from_base(base: &SymMatrix) -> Result<SpectralModel> {
    let d = base.dim();
    let dec = eig(base)?;
    let largest = dec.eigenvalues[0];
    let smallest = *dec.eigenvalues.last().expect("dim >= 1");
    let (dec, regularization) = if largest > 0.0 && smallest > PD_RATIO_THRESHOLD * largest {
        (dec, None)
    } else {
        let eps = 1e-8 * base.trace() / d as f64;
        if !(eps > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "base matrix is not PD and has non-positive trace {:.3e}",
                base.trace()
            )));
        }
        let shifted = base.add_scaled_identity(eps);
        let dec = eig(&shifted)?;
        let largest = dec.eigenvalues[0];
        let smallest = *dec.eigenvalues.last().expect("dim >= 1");
        if largest <= 0.0 || smallest <= PD_RATIO_THRESHOLD * largest {
            return Err(Error::NotPositiveDefinite(format!(
                "base matrix eigenvalues [{smallest:.3e}, {largest:.3e}] even after +{eps:.3e} I"
            )));
        }
        (dec, Some(eps))
    };
    let coeffs = dec.eigenvalues.iter().map(|l| 1.0 / l).collect();
    let mut model = SpectralModel::new(dec.eigenvectors, coeffs)?;
    model.applied_regularization = regularization;
    Ok(model)
}

/// Jordan product `X * Y = (XY + YX) / 2`. Symmetric by construction and
/// commutative.
pub fn jordan_product(x: &SymMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    let d = x.dim();
    if y.dim() != d {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            d,
            y.dim()
        )));
    }
    Ok(SymMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| 0.5 * (x.get(i, k) * y.get(k, j) + y.get(i, k) * x.get(k, j)))
            .sum()
    }))
}

fn upper_triangle_vec(a: &SymMatrix) -> Vec<f64> {
    let d = a.dim();
    let mut v = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            v.push(a.get(i, j));
        }
    }
    v
}

/// Least-squares coefficients expressing `target` in the span of `bases`,
/// over vectorized upper triangles with light Tikhonov damping. Returns the
/// coefficients and the absolute residual norm.
pub fn project_onto_span(bases: &[SymMatrix], target: &SymMatrix) -> (Vec<f64>, f64) {
    let c = bases.len();
    let vecs: Vec<Vec<f64>> = bases.iter().map(upper_triangle_vec).collect();
    let t = upper_triangle_vec(target);
    let mut gram = Matrix::zeros(c, c);
    let mut rhs = vec![0.0; c];
    for a in 0..c {
        for b in 0..c {
            let dot: f64 = vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum();
            gram.set(a, b, dot);
        }
        rhs[a] = vecs[a].iter().zip(&t).map(|(x, y)| x * y).sum();
    }
    let scale = (0..c).map(|i| gram.get(i, i)).fold(0.0_f64, f64::max);
    let damping = 1e-12 * if scale > 0.0 { scale } else { 1.0 };
    for i in 0..c {
        let v = gram.get(i, i) + damping;
        gram.set(i, i, v);
    }
    let coeffs = solve_linear(&gram, &rhs).unwrap_or_else(|| vec![0.0; c]);
    let mut residual_sq = 0.0;
    for (idx, &tv) in t.iter().enumerate() {
        let fit: f64 = vecs.iter().zip(&coeffs).map(|(v, &cf)| cf * v[idx]).sum();
        residual_sq += (tv - fit) * (tv - fit);
    }
    (coeffs, residual_sq.sqrt())
}

/// Tests whether `span{N_k}` is closed under the Jordan product: for every
/// pair `(i, j)`, projects `N_i * N_j` onto the span and reports the largest
/// residual relative to `||N_i * N_j||` (absolute when that norm is below
/// `1e-12`). The manifold of harmonic mixtures over these bases is doubly
/// autoparallel exactly when the residual vanishes.
pub fn check_doubly_autoparallel(bases: &[SymMatrix]) -> Result<AutoparallelReport> {
    if bases.is_empty() {
        return Err(Error::InvalidInput("no basis matrices".to_string()));
    }
    let d = bases[0].dim();
    if bases.iter().any(|b| b.dim() != d) {
        return Err(Error::InvalidInput(
            "basis matrices have mixed dimensions".to_string(),
        ));
    }
    let mut worst = 0.0_f64;
    let mut witness = (0, 0);
    for i in 0..bases.len() {
        for j in i..bases.len() {
            let product = jordan_product(&bases[i], &bases[j])?;
            let norm = upper_triangle_vec(&product)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let (_, residual) = project_onto_span(bases, &product);
            let relative = if norm < 1e-12 {
                residual
            } else {
                residual / norm
            };
            if relative > worst {
                worst = relative;
                witness = (i, j);
            }
        }
    }
    Ok(AutoparallelReport {
        is_doubly_autoparallel: worst < 1e-8,
        worst_residual: worst,
        witness_pair: witness,
    })
}
