//! The em algorithm for kernel matrix completion: alternating KL projections
//! between the data manifold (all PD completions of an observed block) and a
//! model manifold (spectral variants of a base matrix), plus the statistical
//! E-step route, the numeric m-step for general harmonic mixtures, and the
//! MAP m-step with a Gamma prior.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{
    self, eig, inverse_from_eigen, invert_permutation, partition, permute_symmetric, solve_linear,
    Matrix, SymMatrix, PD_RATIO_THRESHOLD,
};
use crate::models::{HarmonicMixture, SpectralModel};

/// Coefficient ceiling used when a model direction is numerically orthogonal
/// to the current completion (quadratic form below `1e-12`).
const COEFF_CLAMP: f64 = 1e12;
const QUAD_FLOOR: f64 = 1e-12;

/// An observed kernel block together with the positions of the missing
/// samples in the original sample ordering.
#[derive(Debug, Clone)]
pub struct IncompleteKernel {
    full_dim: usize,
    observed: SymMatrix,
    missing: Vec<usize>,
}

impl IncompleteKernel {
    /// Validates and stores an incomplete kernel. `observed` must be the PD
    /// kernel block over the non-missing samples, in their original relative
    /// order. `missing` may arrive unsorted; duplicates are rejected.
    pub fn new(full_dim: usize, observed: SymMatrix, missing: Vec<usize>) -> Result<Self> {
        let mut missing = missing;
        missing.sort_unstable();
        if missing.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate missing indices".to_string()));
        }
        if missing.iter().any(|&i| i >= full_dim) {
            return Err(Error::InvalidInput(format!(
                "missing index out of range for dimension {full_dim}"
            )));
        }
        let n = full_dim
            .checked_sub(missing.len())
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                Error::InvalidInput("at least one sample must be observed".to_string())
            })?;
        if observed.dim() != n {
            return Err(Error::InvalidInput(format!(
                "observed block is {}x{} but {} samples are observed",
                observed.dim(),
                observed.dim(),
                n
            )));
        }
        if !matcore::is_positive_definite(&observed) {
            return Err(Error::NotPositiveDefinite(
                "observed kernel block".to_string(),
            ));
        }
        Ok(IncompleteKernel {
            full_dim,
            observed,
            missing,
        })
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn observed_count(&self) -> usize {
        self.observed.dim()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.len()
    }

    pub fn observed(&self) -> &SymMatrix {
        &self.observed
    }

    pub fn missing_indices(&self) -> &[usize] {
        &self.missing
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        let mut is_missing = vec![false; self.full_dim];
        for &i in &self.missing {
            is_missing[i] = true;
        }
        (0..self.full_dim).filter(|&i| !is_missing[i]).collect()
    }

    /// Permutation sending observed samples first, missing samples last:
    /// `perm[new_position] = original_index`.
    pub fn permutation_missing_last(&self) -> Vec<usize> {
        let mut perm = self.observed_indices();
        perm.extend_from_slice(&self.missing);
        perm
    }

    /// Builds an incomplete kernel by masking rows/columns of a complete
    /// matrix. The observed block keeps the surviving entries bit-for-bit.
    pub fn from_complete(full: &SymMatrix, missing: Vec<usize>) -> Result<Self> {
        let mut missing_sorted = missing.clone();
        missing_sorted.sort_unstable();
        let mut is_missing = vec![false; full.dim()];
        for &i in &missing_sorted {
            if i >= full.dim() {
                return Err(Error::InvalidInput(format!(
                    "missing index {i} out of range"
                )));
            }
            is_missing[i] = true;
        }
        let kept: Vec<usize> = (0..full.dim()).filter(|&i| !is_missing[i]).collect();
        if kept.is_empty() {
            return Err(Error::InvalidInput(
                "at least one sample must be observed".to_string(),
            ));
        }
        let observed = SymMatrix::from_fn(kept.len(), |i, j| full.get(kept[i], kept[j]));
        IncompleteKernel::new(full.dim(), observed, missing)
    }
}

/// A point on the data manifold: the full completed matrix in the original
/// sample ordering. Entries at observed index pairs are bit-for-bit copies of
/// the source block.
#[derive(Debug, Clone)]
pub struct CompletedKernel {
    pub matrix: SymMatrix,
    pub source: IncompleteKernel,
}

/// One em iteration: the optimized objective value after the m-step, plus
/// wall-clock step timings.
#[derive(Debug, Clone, Serialize)]
pub struct EmIteration {
    /// `KL(D, M)` after this iteration's m-step; for MAP runs the Gamma
    /// penalty (modulo its b-independent normalization) is included so the
    /// recorded sequence is the quantity the algorithm actually minimizes.
    pub kl: f64,
    pub e_step_ms: f64,
    pub m_step_ms: f64,
}

/// Convergence record of one `run_em` call.
#[derive(Debug, Clone, Serialize)]
pub struct EmTrace {
    pub iterations: Vec<EmIteration>,
    pub converged: bool,
    pub final_kl: f64,
    /// Number of coefficient clamps triggered by degenerate directions.
    pub clamp_events: usize,
}

impl EmTrace {
    pub fn kl_values(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.kl).collect()
    }
}

/// Independent Gamma prior on each model coefficient, with density
/// `pi(b) ∝ b^(nu-1) exp(-b/alpha)`; mean `alpha * nu`, variance
/// `alpha^2 * nu`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaPrior {
    pub nu: f64,
    pub alpha: f64,
}

impl GammaPrior {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        if !(nu > 0.0) || !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Gamma prior requires nu > 0 and alpha > 0, got nu = {nu}, alpha = {alpha}"
            )));
        }
        Ok(GammaPrior { nu, alpha })
    }

    pub fn mean(&self) -> f64 {
        self.alpha * self.nu
    }

    pub fn variance(&self) -> f64 {
        self.alpha * self.alpha * self.nu
    }
}

/// Settings for [`run_em`].
#[derive(Debug, Clone, Serialize)]
pub struct EmConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub prior: Option<GammaPrior>,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 500,
            rel_tol: 1e-9,
            prior: None,
        }
    }
}

fn invert_block_pd(block: &SymMatrix) -> Result<(SymMatrix, f64)> {
    let dec = eig(block)?;
    let largest = dec.eigenvalues[0];
    let smallest = *dec.eigenvalues.last().expect("dim >= 1");
    if largest <= 0.0 || smallest <= PD_RATIO_THRESHOLD * largest {
        return Err(Error::SingularProjection(format!(
            "S_hh eigenvalue range [{smallest:.3e}, {largest:.3e}]"
        )));
    }
    let log_det = dec.eigenvalues.iter().map(|v| v.ln()).sum();
    Ok((inverse_from_eigen(&dec), log_det))
}

/// Shared e-step output from an already-partitioned model inverse.
fn e_step_from_blocks(
    observed: &SymMatrix,
    s_vh: &Matrix,
    s_hh: &SymMatrix,
) -> Result<(Matrix, SymMatrix, f64)> {
    let (s_hh_inv, log_det_s_hh) = invert_block_pd(s_hh)?;
    // B = S_vh S_hh^{-1}
    let b = s_hh_inv.mul_dense(&s_vh.transpose()).transpose();
    // T = K_I B, D_vh = -T, D_hh = S_hh^{-1} + B^T K_I B
    let t = observed.mul_dense(&b);
    let d_vh = t.scale(-1.0);
    let m = s_hh.dim();
    let d_hh = SymMatrix::from_fn(m, |i, j| {
        let quad: f64 = (0..observed.dim()).map(|a| b.get(a, i) * t.get(a, j)).sum();
        s_hh_inv.get(i, j) + quad
    });
    Ok((d_vh, d_hh, log_det_s_hh))
}

/// Closed-form e-projection: given the observed block `K_I` and a model point
/// `M`, returns the missing blocks `(D_vh, D_hh)` of the completion that
/// minimizes `KL(D, M)` over the data manifold.
///
/// With `M^{-1}` partitioned into `S` blocks at the observed dimension,
/// `D_vh = -K_I S_vh S_hh^{-1}` and
/// `D_hh = S_hh^{-1} + S_hh^{-1} S_vh^T K_I S_vh S_hh^{-1}`.
pub fn e_step(observed: &SymMatrix, model_point: &SymMatrix) -> Result<(Matrix, SymMatrix)> {
    let n = observed.dim();
    let l = model_point.dim();
    if n >= l {
        return Err(Error::InvalidInput(format!(
            "observed dimension {n} must be smaller than full dimension {l}"
        )));
    }
    let model_inv = inverse_from_eigen(
        &matcore::eig_pd(model_point)
            .map_err(|_| Error::NotPositiveDefinite("model point".to_string()))?,
    );
    let blocks = partition(&model_inv, n)?;
    let (d_vh, d_hh, _) = e_step_from_blocks(observed, &blocks.vh, &blocks.hh)?;
    Ok((d_vh, d_hh))
}

/// The EM-view e-step: missing blocks via conditional expectations of the
/// Gaussian model rather than the projection closed form.
///
/// The conditional distribution of hidden given visible has mean map
/// `h = -A v` with `A = S_hh^{-1} S_vh^T` and covariance `S_hh^{-1}`;
/// replacing the visible second moment with `K_I` yields
/// `D_vh = -K_I A^T` and `D_hh = S_hh^{-1} + A K_I A^T`. Produces the same
/// values as [`e_step`] through a separate computation path.
pub fn e_step_statistical(
    observed: &SymMatrix,
    model_point: &SymMatrix,
) -> Result<(Matrix, SymMatrix)> {
    let n = observed.dim();
    let l = model_point.dim();
    if n >= l {
        return Err(Error::InvalidInput(format!(
            "observed dimension {n} must be smaller than full dimension {l}"
        )));
    }
    let model_inv = inverse_from_eigen(
        &matcore::eig_pd(model_point)
            .map_err(|_| Error::NotPositiveDefinite("model point".to_string()))?,
    );
    let blocks = partition(&model_inv, n)?;
    let (cond_cov, _) = invert_block_pd(&blocks.hh)?;
    // A = S_hh^{-1} S_vh^T, the (negated) regression map from visible to
    // hidden variables.
    let a = cond_cov.mul_dense(&blocks.vh.transpose());
    // E_o[v h^T] = -K_I A^T
    let d_vh = observed.mul_dense(&a.transpose()).scale(-1.0);
    // E_o[h h^T] = S_hh^{-1} + A K_I A^T
    let u = a.matmul(&observed.to_dense());
    let g = u.matmul(&a.transpose());
    let m = l - n;
    let d_hh = SymMatrix::from_fn(m, |i, j| {
        cond_cov.get(i, j) + 0.5 * (g.get(i, j) + g.get(j, i))
    });
    Ok((d_vh, d_hh))
}

/// Assembles a full completion from the observed block and the e-step
/// output. Observed entries are copied bit-for-bit.
pub fn assemble_completion(observed: &SymMatrix, d_vh: &Matrix, d_hh: &SymMatrix) -> SymMatrix {
    let n = observed.dim();
    let m = d_hh.dim();
    assert_eq!(d_vh.rows(), n);
    assert_eq!(d_vh.cols(), m);
    SymMatrix::from_fn(n + m, |i, j| {
        if j < n {
            observed.get(i, j)
        } else if i < n {
            d_vh.get(i, j - n)
        } else {
            d_hh.get(i - n, j - n)
        }
    })
}

fn spectral_quadratic_forms(d: &SymMatrix, model: &SpectralModel) -> Vec<f64> {
    (0..model.dim())
        .map(|k| d.quadratic_form(&model.eigenvectors().column(k)))
        .collect()
}

/// Closed-form m-projection onto the spectral-variant manifold:
/// `b_i = 1 / tr(M_i D) = 1 / (v_i^T D v_i)`.
pub fn m_step_spectral(d: &SymMatrix, model: &SpectralModel) -> Result<SpectralModel> {
    if d.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            d.dim(),
            model.dim()
        )));
    }
    let quads = spectral_quadratic_forms(d, model);
    let mut coeffs = Vec::with_capacity(quads.len());
    for (index, &q) in quads.iter().enumerate() {
        debug_assert!(q.is_finite());
        if q < QUAD_FLOOR {
            // Negative q cannot occur for PD targets; near-zero means the
            // direction carries no information about D.
            return Err(Error::DegenerateDirection { index, value: q });
        }
        coeffs.push(1.0 / q);
    }
    model.with_coefficients(coeffs)
}

/// MAP m-projection under an independent Gamma prior on each coefficient:
/// `b_i = nu / (tr(M_i D) + 1/alpha)`. Recovers the plain m-step in the flat
/// limit `nu = 1`, `alpha -> inf`.
pub fn m_step_map(
    d: &SymMatrix,
    model: &SpectralModel,
    prior: &GammaPrior,
) -> Result<SpectralModel> {
    if d.dim() != model.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            d.dim(),
            model.dim()
        )));
    }
    let quads = spectral_quadratic_forms(d, model);
    let coeffs = quads
        .iter()
        .map(|&q| prior.nu / (q + 1.0 / prior.alpha))
        .collect();
    model.with_coefficients(coeffs)
}

/// Numeric m-projection onto a general harmonic-mixture manifold by damped
/// Newton on the saddle equations
/// `tr(N_i (sum_j b_j N_j)^{-1}) = tr(N_i D)`.
///
/// The gradient of the underlying convex objective is the saddle residual, so
/// the returned point satisfies the equations with residual infinity-norm
/// below `1e-8`, and the objective never increases along the way. Starting at
/// a solution returns immediately.
pub fn m_step_numeric(d: &SymMatrix, mixture: &HarmonicMixture) -> Result<HarmonicMixture> {
    const TOL: f64 = 1e-8;
    const MAX_ITERS: usize = 500;
    if d.dim() != mixture.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            d.dim(),
            mixture.dim()
        )));
    }
    let bases = mixture.bases();
    let c = bases.len();
    let target_traces: Vec<f64> = bases.iter().map(|n| n.trace_product(d)).collect();

    let objective_and_gradient = |b: &[f64]| -> Option<(f64, Vec<f64>, SymMatrix)> {
        let trial = mixture.with_coefficients(b.to_vec()).ok()?;
        let q = trial.weighted_sum();
        let dec = matcore::eig_pd(&q).ok()?;
        let log_det: f64 = dec.eigenvalues.iter().map(|v| v.ln()).sum();
        let q_inv = inverse_from_eigen(&dec);
        let value: f64 = target_traces
            .iter()
            .zip(b)
            .map(|(t, bi)| t * bi)
            .sum::<f64>()
            - log_det;
        let grad: Vec<f64> = bases
            .iter()
            .zip(&target_traces)
            .map(|(n, t)| t - n.trace_product(&q_inv))
            .collect();
        Some((value, grad, q_inv))
    };

    let mut b = mixture.coefficients().to_vec();
    let (mut value, mut grad, mut q_inv) = objective_and_gradient(&b)
        .ok_or_else(|| Error::NotPositiveDefinite("mixture start point".to_string()))?;

    for iter in 0..MAX_ITERS {
        let residual = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if residual < TOL {
            return mixture.with_coefficients(b);
        }
        // Analytic Hessian: H_ij = tr(N_i Q^{-1} N_j Q^{-1}).
        let w: Vec<Matrix> = bases
            .iter()
            .map(|n| n.to_dense().matmul(&q_inv.to_dense()))
            .collect();
        let dim = d.dim();
        let hessian = Matrix::from_fn(c, c, |i, j| {
            let mut acc = 0.0;
            for a in 0..dim {
                for bb in 0..dim {
                    acc += w[i].get(a, bb) * w[j].get(bb, a);
                }
            }
            acc
        });

        let mut damping = 0.0;
        let mut step: Option<Vec<f64>> = None;
        for _ in 0..40 {
            let damped = Matrix::from_fn(c, c, |i, j| {
                hessian.get(i, j) + if i == j { damping } else { 0.0 }
            });
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            if let Some(s) = solve_linear(&damped, &rhs) {
                let slope: f64 = grad.iter().zip(&s).map(|(a, x)| a * x).sum();
                if slope < 0.0 {
                    step = Some(s);
                    break;
                }
            }
            damping = if damping == 0.0 {
                1e-10
            } else {
                damping * 10.0
            };
        }
        let step = step.ok_or_else(|| Error::OptimizationFailed {
            iterations: iter,
            message: "no descent direction for the saddle system".to_string(),
        })?;
        let slope: f64 = grad.iter().zip(&step).map(|(a, x)| a * x).sum();

        let mut alpha = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = b.iter().zip(&step).map(|(bi, s)| bi + alpha * s).collect();
            if let Some((v, g, qi)) = objective_and_gradient(&candidate) {
                if v <= value + 1e-4 * alpha * slope {
                    b = candidate;
                    value = v;
                    grad = g;
                    q_inv = qi;
                    advanced = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !advanced {
            return Err(Error::OptimizationFailed {
                iterations: iter,
                message: format!("line search stalled at residual {residual:.3e}"),
            });
        }
    }
    Err(Error::OptimizationFailed {
        iterations: MAX_ITERS,
        message: "saddle equations not satisfied within the iteration cap".to_string(),
    })
}

/// Initial model point for the em loop: the spectral model of the base
/// matrix itself (`b_i = 1/lambda_i`), i.e. the unperturbed base.
pub fn init_model(base: &SymMatrix) -> Result<SpectralModel> {
    crate::models::spectral_model_from_base(base)
}

fn new_coefficients(quads: &[f64], prior: Option<&GammaPrior>) -> (Vec<f64>, usize) {
    match prior {
        Some(p) => (
            quads.iter().map(|&q| p.nu / (q + 1.0 / p.alpha)).collect(),
            0,
        ),
        None => {
            let mut clamps = 0;
            let coeffs = quads
                .iter()
                .map(|&q| {
                    if q < QUAD_FLOOR {
                        clamps += 1;
                        COEFF_CLAMP
                    } else {
                        1.0 / q
                    }
                })
                .collect();
            (coeffs, clamps)
        }
    }
}

/// Gamma penalty added to KL for MAP runs, dropping the `b`-independent
/// normalization: `sum_j (b_j/alpha - (nu-1) ln b_j)`.
fn prior_penalty(coeffs: &[f64], prior: &GammaPrior) -> f64 {
    coeffs
        .iter()
        .map(|&b| b / prior.alpha - (prior.nu - 1.0) * b.ln())
        .sum()
}

/// Runs the em algorithm: alternately e-projects onto the data manifold and
/// m-projects onto the spectral-variant manifold of `base` until the relative
/// objective change falls below `config.rel_tol` or `config.max_iters` is
/// reached.
///
/// Returns the completed matrix (observed entries preserved bit-for-bit, in
/// the original sample ordering), the fitted model (materialize it for the
/// estimated matrix), and the iteration trace. Arbitrary missing-index sets
/// are handled by permuting missing samples last internally and un-permuting
/// on output.
pub fn run_em(
    incomplete: &IncompleteKernel,
    base: &SymMatrix,
    config: &EmConfig,
) -> Result<(CompletedKernel, SpectralModel, EmTrace)> {
    let l = incomplete.full_dim();
    if base.dim() != l {
        return Err(Error::InvalidInput(format!(
            "base matrix dimension {} does not cover all {} samples",
            base.dim(),
            l
        )));
    }
    if config.max_iters < 1 {
        return Err(Error::InvalidInput(
            "max_iters must be at least 1".to_string(),
        ));
    }
    if !(config.rel_tol > 0.0) {
        return Err(Error::InvalidInput("rel_tol must be positive".to_string()));
    }

    let n = incomplete.observed_count();
    let m = incomplete.missing_count();
    let perm = incomplete.permutation_missing_last();
    let base_perm = permute_symmetric(base, &perm)?;
    let mut model = init_model(&base_perm)?;
    let observed = incomplete.observed();
    let log_det_observed = matcore::log_det(observed)
        .map_err(|_| Error::NotPositiveDefinite("observed kernel block".to_string()))?;

    let mut iterations: Vec<EmIteration> = Vec::new();
    let mut clamp_events = 0;
    let mut converged = false;

    // Completion with every sample observed: the data manifold is the single
    // point K_I; one m-step fits the model to it.
    if m == 0 {
        let started = Instant::now();
        let quads = spectral_quadratic_forms(observed, &model);
        let (coeffs, clamps) = new_coefficients(&quads, config.prior.as_ref());
        clamp_events += clamps;
        model = model.with_coefficients(coeffs)?;
        let m_step_ms = started.elapsed().as_secs_f64() * 1e3;
        let mut kl = objective_value(&quads, model.coefficients(), log_det_observed, l);
        if let Some(prior) = &config.prior {
            kl += prior_penalty(model.coefficients(), prior);
        }
        if !kl.is_finite() {
            return Err(Error::DivergedNumerically(format!("objective = {kl}")));
        }
        let trace = EmTrace {
            iterations: vec![EmIteration {
                kl,
                e_step_ms: 0.0,
                m_step_ms,
            }],
            converged: true,
            final_kl: kl,
            clamp_events,
        };
        return Ok((
            CompletedKernel {
                matrix: observed.clone(),
                source: incomplete.clone(),
            },
            model,
            trace,
        ));
    }

    let mut completion = SymMatrix::identity(l);
    for iter in 0..config.max_iters {
        // e-step: project the model point onto the data manifold. The model
        // inverse is available analytically from the coefficients, so no
        // matrix inversion is needed here.
        let e_started = Instant::now();
        let model_inv = model.materialize_inverse();
        let blocks = partition(&model_inv, n)?;
        let (d_vh, d_hh, log_det_s_hh) = e_step_from_blocks(observed, &blocks.vh, &blocks.hh)?;
        completion = assemble_completion(observed, &d_vh, &d_hh);
        let e_step_ms = e_started.elapsed().as_secs_f64() * 1e3;

        // m-step: refit the spectral coefficients to the new completion.
        let m_started = Instant::now();
        let quads = spectral_quadratic_forms(&completion, &model);
        let (coeffs, clamps) = new_coefficients(&quads, config.prior.as_ref());
        clamp_events += clamps;
        model = model.with_coefficients(coeffs)?;
        let m_step_ms = m_started.elapsed().as_secs_f64() * 1e3;

        // KL(D, M) in closed form: tr(M^{-1} D) = sum_j b_j q_j,
        // log det M = -sum_j ln b_j, log det D = log det K_I - log det S_hh.
        let log_det_completion = log_det_observed - log_det_s_hh;
        let mut kl = objective_value(&quads, model.coefficients(), log_det_completion, l);
        if let Some(prior) = &config.prior {
            kl += prior_penalty(model.coefficients(), prior);
        }
        if !kl.is_finite() {
            return Err(Error::DivergedNumerically(format!(
                "objective = {kl} at iteration {iter}"
            )));
        }
        let previous = iterations.last().map(|it| it.kl);
        iterations.push(EmIteration {
            kl,
            e_step_ms,
            m_step_ms,
        });
        if let Some(prev) = previous {
            let relative = (prev - kl).abs() / prev.abs().max(1e-12);
            if relative < config.rel_tol {
                converged = true;
                break;
            }
        }
    }

    let inv_perm = invert_permutation(&perm);
    let completed = permute_symmetric(&completion, &inv_perm)?;
    // Bring the model's eigenvector rows back to the original sample order so
    // its materialization lives in the same coordinates as the completion.
    let restored = model.with_permuted_rows(&inv_perm)?;
    let final_kl = iterations.last().map(|it| it.kl).unwrap_or(f64::NAN);
    Ok((
        CompletedKernel {
            matrix: completed,
            source: incomplete.clone(),
        },
        restored,
        EmTrace {
            iterations,
            converged,
            final_kl,
            clamp_events,
        },
    ))
}

/// `sum_j b_j q_j - sum_j ln b_j - log det D - l`.
fn objective_value(quads: &[f64], coeffs: &[f64], log_det_completion: f64, l: usize) -> f64 {
    let trace_term: f64 = quads.iter().zip(coeffs).map(|(q, b)| q * b).sum();
    let log_det_model: f64 = -coeffs.iter().map(|b| b.ln()).sum::<f64>();
    trace_term + log_det_model - log_det_completion - l as f64
}
