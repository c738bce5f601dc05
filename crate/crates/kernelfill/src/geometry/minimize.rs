//! Damped-Newton minimizer for the two convex projection objectives.
//!
//! This is the independent oracle the closed-form e/m-projections are tested
//! against, so it deliberately shares nothing with those code paths: analytic
//! gradients straight from matrix calculus, a finite-difference Hessian, and
//! a backtracking line search that keeps iterates inside the PD cone. Meant
//! for test-scale problems (dimension <= 8 or so), not production use.

use crate::error::{Error, Result};
use crate::matcore::{eig_pd, inverse_from_eigen, solve_linear, Matrix, SymMatrix};

/// Which convex problem to minimize.
///
/// * `EStepOverD`: `L_e(D) = tr(D M^{-1}) - log det D` over the free blocks
///   `(D_vh, D_hh)` of a completion whose visible block is pinned to
///   `observed`.
/// * `MStepOverB`: `L_m(b) = sum_j b_j tr(N_j D) - log det(sum_j b_j N_j)`
///   over the mixture coefficients `b`.
#[derive(Debug, Clone)]
pub enum KlObjective {
    EStepOverD {
        observed: SymMatrix,
        model: SymMatrix,
    },
    MStepOverB {
        target: SymMatrix,
        bases: Vec<SymMatrix>,
    },
}

/// Default gradient infinity-norm tolerance for [`numeric_min_kl`]. Pushing
/// far below this runs into objective-value rounding noise during the line
/// search.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Result of a successful minimization.
#[derive(Debug, Clone)]
pub struct NumericMinimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Packs `(D_vh, D_hh)` into the flat parameter vector used by
/// [`KlObjective::EStepOverD`]: `D_vh` row-major, then the upper triangle of
/// `D_hh` row-major.
pub fn pack_e_step_point(dvh: &Matrix, dhh: &SymMatrix) -> Vec<f64> {
    let n = dvh.rows();
    let m = dvh.cols();
    assert_eq!(dhh.dim(), m);
    let mut x = Vec::with_capacity(n * m + m * (m + 1) / 2);
    for i in 0..n {
        for j in 0..m {
            x.push(dvh.get(i, j));
        }
    }
    for i in 0..m {
        for j in i..m {
            x.push(dhh.get(i, j));
        }
    }
    x
}

/// Inverse of [`pack_e_step_point`].
pub fn unpack_e_step_point(x: &[f64], n: usize, m: usize) -> (Matrix, SymMatrix) {
    assert_eq!(x.len(), n * m + m * (m + 1) / 2);
    let dvh = Matrix::from_fn(n, m, |i, j| x[i * m + j]);
    let base = n * m;
    let dhh = SymMatrix::from_fn(m, |i, j| x[base + i * m - i * (i + 1) / 2 + j]);
    (dvh, dhh)
}

enum Prepared {
    EStep {
        observed: SymMatrix,
        model_inv: SymMatrix,
        n: usize,
        m: usize,
    },
    MStep {
        base_traces: Vec<f64>,
        bases: Vec<SymMatrix>,
    },
}

impl Prepared {
    fn new(objective: &KlObjective) -> Result<Self> {
        match objective {
            KlObjective::EStepOverD { observed, model } => {
                let l = model.dim();
                let n = observed.dim();
                if n >= l {
                    return Err(Error::InvalidInput(format!(
                        "observed dimension {n} must be smaller than model dimension {l}"
                    )));
                }
                let model_inv = inverse_from_eigen(&eig_pd(model)?);
                Ok(Prepared::EStep {
                    observed: observed.clone(),
                    model_inv,
                    n,
                    m: l - n,
                })
            }
            KlObjective::MStepOverB { target, bases } => {
                if bases.is_empty() {
                    return Err(Error::InvalidInput("no basis matrices".to_string()));
                }
                for b in bases {
                    if b.dim() != target.dim() {
                        return Err(Error::InvalidInput(
                            "basis dimension does not match target".to_string(),
                        ));
                    }
                }
                let base_traces = bases.iter().map(|b| b.trace_product(target)).collect();
                Ok(Prepared::MStep {
                    base_traces,
                    bases: bases.clone(),
                })
            }
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Prepared::EStep { n, m, .. } => n * m + m * (m + 1) / 2,
            Prepared::MStep { bases, .. } => bases.len(),
        }
    }

    fn assemble_completion(&self, x: &[f64]) -> SymMatrix {
        match self {
            Prepared::EStep { observed, n, m, .. } => {
                let (dvh, dhh) = unpack_e_step_point(x, *n, *m);
                let n = *n;
                SymMatrix::from_fn(n + m, |i, j| {
                    if j < n {
                        observed.get(i, j)
                    } else if i < n {
                        dvh.get(i, j - n)
                    } else {
                        dhh.get(i - n, j - n)
                    }
                })
            }
            Prepared::MStep { .. } => unreachable!("m-step has no completion"),
        }
    }

    fn mixture_sum(&self, x: &[f64]) -> SymMatrix {
        match self {
            Prepared::MStep { bases, .. } => {
                let d = bases[0].dim();
                SymMatrix::from_fn(d, |i, j| {
                    bases
                        .iter()
                        .zip(x)
                        .map(|(base, &b)| b * base.get(i, j))
                        .sum()
                })
            }
            Prepared::EStep { .. } => unreachable!("e-step has no mixture"),
        }
    }

    /// Objective value, or `None` when `x` leaves the PD-feasible region.
    fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Prepared::EStep { model_inv, .. } => {
                let d = self.assemble_completion(x);
                let dec = eig_pd(&d).ok()?;
                let log_det: f64 = dec.eigenvalues.iter().map(|v| v.ln()).sum();
                Some(model_inv.trace_product(&d) - log_det)
            }
            Prepared::MStep { base_traces, .. } => {
                let q = self.mixture_sum(x);
                let dec = eig_pd(&q).ok()?;
                let log_det: f64 = dec.eigenvalues.iter().map(|v| v.ln()).sum();
                let linear: f64 = base_traces.iter().zip(x).map(|(t, b)| t * b).sum();
                Some(linear - log_det)
            }
        }
    }

    /// Analytic gradient, or `None` when infeasible.
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Prepared::EStep {
                model_inv, n, m, ..
            } => {
                let d = self.assemble_completion(x);
                let d_inv = inverse_from_eigen(&eig_pd(&d).ok()?);
                let n = *n;
                let m = *m;
                let mut g = Vec::with_capacity(self.param_count());
                // d L_e / d D = M^{-1} - D^{-1}; off-diagonal free entries
                // appear twice in D, hence the factor 2.
                for i in 0..n {
                    for j in 0..m {
                        g.push(2.0 * (model_inv.get(i, n + j) - d_inv.get(i, n + j)));
                    }
                }
                for i in 0..m {
                    for j in i..m {
                        let factor = if i == j { 1.0 } else { 2.0 };
                        g.push(factor * (model_inv.get(n + i, n + j) - d_inv.get(n + i, n + j)));
                    }
                }
                Some(g)
            }
            Prepared::MStep {
                base_traces, bases, ..
            } => {
                let q = self.mixture_sum(x);
                let q_inv = inverse_from_eigen(&eig_pd(&q).ok()?);
                Some(
                    bases
                        .iter()
                        .zip(base_traces)
                        .map(|(base, t)| t - base.trace_product(&q_inv))
                        .collect(),
                )
            }
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Central finite-difference Hessian of the analytic gradient. Shrinks the
/// step when a probe point exits the feasible region.
fn fd_hessian(prepared: &Prepared, x: &[f64]) -> Option<Matrix> {
    let p = x.len();
    let mut h = Matrix::zeros(p, p);
    for k in 0..p {
        let mut step = 1e-5 * x[k].abs().max(1.0);
        let mut column: Option<Vec<f64>> = None;
        for _ in 0..8 {
            let mut plus = x.to_vec();
            plus[k] += step;
            let mut minus = x.to_vec();
            minus[k] -= step;
            match (prepared.gradient(&plus), prepared.gradient(&minus)) {
                (Some(gp), Some(gm)) => {
                    column = Some(
                        gp.iter()
                            .zip(&gm)
                            .map(|(a, b)| (a - b) / (2.0 * step))
                            .collect(),
                    );
                    break;
                }
                _ => step *= 0.1,
            }
        }
        let column = column?;
        for i in 0..p {
            h.set(i, k, column[i]);
        }
    }
    // Symmetrize; finite differencing is noisy.
    Some(Matrix::from_fn(p, p, |i, j| {
        0.5 * (h.get(i, j) + h.get(j, i))
    }))
}

/// Minimizes one of the two convex projection objectives by damped Newton
/// iteration with backtracking line search, starting from `start`.
///
/// Returns once the gradient infinity-norm drops below `tol` (default choice
/// in callers: `1e-8`). The returned objective value never exceeds the value
/// at `start`.
pub fn numeric_min_kl(objective: &KlObjective, start: &[f64], tol: f64) -> Result<NumericMinimum> {
    const MAX_ITERS: usize = 500;
    let prepared = Prepared::new(objective)?;
    if start.len() != prepared.param_count() {
        return Err(Error::InvalidInput(format!(
            "start has {} parameters, objective needs {}",
            start.len(),
            prepared.param_count()
        )));
    }
    let mut x = start.to_vec();
    let mut fx = prepared
        .value(&x)
        .ok_or_else(|| Error::InvalidInput("start point is not PD-feasible".to_string()))?;

    for iter in 0..MAX_ITERS {
        let g = prepared
            .gradient(&x)
            .ok_or_else(|| Error::OptimizationFailed {
                iterations: iter,
                message: "iterate left the feasible region".to_string(),
            })?;
        let g_norm = inf_norm(&g);
        if g_norm < tol {
            return Ok(NumericMinimum {
                argmin: x,
                value: fx,
                iterations: iter,
                grad_norm: g_norm,
            });
        }

        let hessian = fd_hessian(&prepared, &x).ok_or_else(|| Error::OptimizationFailed {
            iterations: iter,
            message: "could not evaluate a finite-difference Hessian".to_string(),
        })?;

        // Damp until the Newton system solves and yields a descent direction.
        let mut damping = 0.0;
        let mut direction: Option<Vec<f64>> = None;
        for _ in 0..40 {
            let damped = Matrix::from_fn(x.len(), x.len(), |i, j| {
                hessian.get(i, j) + if i == j { damping } else { 0.0 }
            });
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            if let Some(s) = solve_linear(&damped, &rhs) {
                let slope: f64 = g.iter().zip(&s).map(|(a, b)| a * b).sum();
                if slope < 0.0 {
                    direction = Some(s);
                    break;
                }
            }
            damping = if damping == 0.0 { 1e-8 } else { damping * 10.0 };
        }
        let direction = direction.ok_or_else(|| Error::OptimizationFailed {
            iterations: iter,
            message: format!("no descent direction found (|grad| = {g_norm:.3e})"),
        })?;
        let slope: f64 = g.iter().zip(&direction).map(|(a, b)| a * b).sum();

        // Backtracking: halve until the step is feasible and decreases the
        // objective by a sufficient margin.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, si)| xi + alpha * si)
                .collect();
            if let Some(f_new) = prepared.value(&candidate) {
                if f_new <= fx + 1e-4 * alpha * slope {
                    x = candidate;
                    fx = f_new;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::OptimizationFailed {
                iterations: iter,
                message: format!(
                    "line search found no PD-feasible decrease (|grad| = {g_norm:.3e})"
                ),
            });
        }
    }

    Err(Error::OptimizationFailed {
        iterations: MAX_ITERS,
        message: "iteration cap reached before the gradient tolerance".to_string(),
    })
}
