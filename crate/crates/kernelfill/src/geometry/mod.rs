//! Information geometry of the positive definite cone: the KL divergence
//! between matrices, exponential and mixture geodesics, and a generic numeric
//! convex minimizer used as an independent oracle for the closed-form
//! projections.

mod minimize;

pub use minimize::{
    numeric_min_kl, pack_e_step_point, unpack_e_step_point, KlObjective, NumericMinimum,
    DEFAULT_TOL,
};

use crate::error::{Error, Result};
use crate::matcore::{eig_pd, inverse_from_eigen, SymMatrix};

/// The two flavors of geodesic on the PD cone: straight lines in
/// inverse-matrix coordinates (exponential) or in matrix-entry coordinates
/// (mixture).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicKind {
    Exponential,
    Mixture,
}

/// A KL divergence value in nats. Nonnegative up to numerical noise; values
/// above `-1e-10` are considered valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlValue(f64);

impl KlValue {
    pub(crate) fn new(value: f64) -> Self {
        debug_assert!(
            value >= -1e-10,
            "KL divergence fell below the noise floor: {value}"
        );
        KlValue(value)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `KL(P, Q) = tr(Q^{-1} P) + log det Q - log det P - d` for positive
/// definite matrices of equal dimension.
///
/// Both log-determinants go through the spectrum rather than determinant
/// products, so large dimensions do not overflow.
pub fn kl(p: &SymMatrix, q: &SymMatrix) -> Result<KlValue> {
    let d = p.dim();
    if q.dim() != d {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            d,
            q.dim()
        )));
    }
    let dec_p = eig_pd(p)?;
    let dec_q = eig_pd(q)?;
    let log_det_p: f64 = dec_p.eigenvalues.iter().map(|v| v.ln()).sum();
    let log_det_q: f64 = dec_q.eigenvalues.iter().map(|v| v.ln()).sum();
    let q_inv = inverse_from_eigen(&dec_q);
    let trace_term = q_inv.trace_product(p);
    Ok(KlValue::new(trace_term + log_det_q - log_det_p - d as f64))
}

/// Point at parameter `t` on the geodesic from `p1` to `p2`.
///
/// Mixture geodesics interpolate entries linearly; exponential geodesics
/// interpolate the inverses linearly. `t = 0` returns `p1`, `t = 1` returns
/// `p2`.
pub fn geodesic_point(
    p1: &SymMatrix,
    p2: &SymMatrix,
    t: f64,
    kind: GeodesicKind,
) -> Result<SymMatrix> {
    if p1.dim() != p2.dim() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            p1.dim(),
            p2.dim()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!(
            "geodesic parameter {t} outside [0, 1]"
        )));
    }
    match kind {
        GeodesicKind::Mixture => {
            // Entrywise p1 + t (p2 - p1); exact at shared entries since the
            // difference is exactly zero there.
            eig_pd(p1)?;
            eig_pd(p2)?;
            Ok(SymMatrix::from_fn(p1.dim(), |i, j| {
                p1.get(i, j) + t * (p2.get(i, j) - p1.get(i, j))
            }))
        }
        GeodesicKind::Exponential => {
            let inv1 = inverse_from_eigen(&eig_pd(p1)?);
            let inv2 = inverse_from_eigen(&eig_pd(p2)?);
            let interpolated = SymMatrix::from_fn(p1.dim(), |i, j| {
                inv1.get(i, j) + t * (inv2.get(i, j) - inv1.get(i, j))
            });
            Ok(inverse_from_eigen(&eig_pd(&interpolated)?))
        }
    }
}
