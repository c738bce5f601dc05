//! Completion of kernel (Gram) matrices with missing rows and columns.
//!
//! When whole samples are absent from one data source, their rows and columns
//! of the kernel matrix are missing. This crate fills them by fitting the
//! spectral variants of a complete base matrix from a second source: the set
//! of all positive definite completions forms one manifold, the spectral
//! variants form another, and an alternating pair of closed-form KL
//! projections walks both toward their nearest points.
//!
//! Modules:
//!
//! * [`matcore`] — dense symmetric linear algebra (Jacobi eigensolver,
//!   inversion, log-determinant, block partitioning).
//! * [`geometry`] — KL divergence on the PD cone, e/m-geodesics, and a
//!   numeric convex minimizer used as a test oracle.
//! * [`models`] — spectral-variant and harmonic-mixture model manifolds, and
//!   the Jordan-product span test for analytic m-step solvability.
//! * [`completion`] — the e/m projection steps (closed-form, statistical,
//!   numeric, and MAP variants) and the alternating driver.
//! * [`bioeval`] — bimer count kernels, kernel k-means, the Adjusted Rand
//!   Index, and a synthetic paired-marker sequence generator.

// Index loops mirror the matrix math; `!(x > 0.0)` validation deliberately
// rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bioeval;
pub mod completion;
pub mod error;
pub mod geometry;
pub mod matcore;
pub mod models;

pub use error::{Error, Result};
