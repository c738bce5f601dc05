//! Closed-form projections checked against the independent damped-Newton
//! minimizer, plus the geometric flatness invariants of the two manifolds.

mod common;

use common::{random_pd, random_symmetric, rng};
use kernelfill::completion::{assemble_completion, e_step, m_step_spectral};
use kernelfill::geometry::{
    geodesic_point, kl, numeric_min_kl, pack_e_step_point, unpack_e_step_point, GeodesicKind,
    KlObjective,
};
use kernelfill::matcore::{inverse, Matrix, SymMatrix};
use kernelfill::models::{project_onto_span, spectral_model_from_base, HarmonicMixture};

#[test]
fn e_step_matches_numeric_oracle() {
    let mut r = rng(2024);
    for case in 0..20 {
        let n = 1 + case % 4; // visible dimension 1..=4 within a 5-dim model
        let l = 5;
        let model = random_pd(l, 0.5, &mut r);
        let observed = random_pd(n, 0.5, &mut r);

        let (d_vh, d_hh) = e_step(&observed, &model).expect("closed form");
        let objective = KlObjective::EStepOverD {
            observed: observed.clone(),
            model: model.clone(),
        };
        let start = pack_e_step_point(&Matrix::zeros(n, l - n), &SymMatrix::identity(l - n));
        let oracle = numeric_min_kl(&objective, &start, 1e-8).expect("oracle");
        let (o_vh, o_hh) = unpack_e_step_point(&oracle.argmin, n, l - n);

        let err = d_vh.max_abs_diff(&o_vh).max(d_hh.max_abs_diff(&o_hh));
        assert!(
            err < 1e-6,
            "case {case}: closed form vs oracle differ by {err}"
        );
    }
}

#[test]
fn m_step_matches_numeric_oracle() {
    let mut r = rng(4048);
    for case in 0..20 {
        let d = 5;
        let target = random_pd(d, 0.5, &mut r);
        let base = random_pd(d, 0.5, &mut r);
        let model = spectral_model_from_base(&base).expect("base is PD");

        let refit = m_step_spectral(&target, &model).expect("closed form");

        let projectors: Vec<SymMatrix> = (0..d)
            .map(|k| {
                let v = model.eigenvectors().column(k);
                SymMatrix::from_fn(d, |i, j| v[i] * v[j])
            })
            .collect();
        let objective = KlObjective::MStepOverB {
            target: target.clone(),
            bases: projectors,
        };
        let oracle = numeric_min_kl(&objective, &vec![1.0; d], 1e-8).expect("oracle");

        for (idx, (closed, numeric)) in refit.coefficients().iter().zip(&oracle.argmin).enumerate()
        {
            let rel = (closed - numeric).abs() / closed.abs().max(1e-300);
            assert!(
                rel < 1e-6,
                "case {case} coefficient {idx}: {closed} vs {numeric} (rel {rel})"
            );
        }
    }
}

#[test]
fn oracle_argmin_independent_of_start() {
    let mut r = rng(512);
    let model = random_pd(5, 0.5, &mut r);
    let observed = random_pd(3, 0.5, &mut r);
    let objective = KlObjective::EStepOverD { observed, model };
    let starts = [
        pack_e_step_point(&Matrix::zeros(3, 2), &SymMatrix::identity(2)),
        pack_e_step_point(&Matrix::zeros(3, 2), &SymMatrix::identity(2).scale(3.0)),
        pack_e_step_point(
            &Matrix::from_fn(3, 2, |i, j| 0.05 * (i as f64 - j as f64)),
            &SymMatrix::identity(2).scale(1.5),
        ),
    ];
    let reference = numeric_min_kl(&objective, &starts[0], 1e-8).unwrap();
    for start in &starts[1..] {
        let other = numeric_min_kl(&objective, start, 1e-8).unwrap();
        for (a, b) in reference.argmin.iter().zip(&other.argmin) {
            assert!((a - b).abs() < 1e-6, "argmin depends on start: {a} vs {b}");
        }
    }
}

#[test]
fn kl_nonnegative_on_random_pd_pairs() {
    let mut r = rng(99);
    for case in 0..500 {
        let (p, q) = if case % 10 == 0 {
            let p = random_pd(4, 0.3, &mut r);
            (p.clone(), p)
        } else {
            (random_pd(4, 0.3, &mut r), random_pd(4, 0.3, &mut r))
        };
        let value = kl(&p, &q).unwrap().value();
        assert!(value >= -1e-10, "case {case}: KL = {value}");
        let close = p.max_abs_diff(&q) < 1e-9;
        assert_eq!(
            value < 1e-9,
            close,
            "case {case}: KL {value} vs max diff {}",
            p.max_abs_diff(&q)
        );
    }
}

#[test]
fn exponential_geodesic_stays_in_harmonic_mixture_manifold() {
    // Between two mixture points the inverse interpolates linearly, so the
    // recovered span coefficients must interpolate linearly too.
    let mut r = rng(314);
    let bases = vec![
        SymMatrix::identity(4),
        random_symmetric(4, &mut r).scale(0.2),
        random_symmetric(4, &mut r).scale(0.1),
    ];
    let b1 = vec![1.0, 0.4, -0.3];
    let b2 = vec![2.0, -0.2, 0.5];
    let p1 = HarmonicMixture::new(bases.clone(), b1.clone())
        .unwrap()
        .materialize()
        .unwrap();
    let p2 = HarmonicMixture::new(bases.clone(), b2.clone())
        .unwrap()
        .materialize()
        .unwrap();
    for &t in &[0.25, 0.5, 0.8] {
        let point = geodesic_point(&p1, &p2, t, GeodesicKind::Exponential).unwrap();
        let point_inv = inverse(&point).unwrap();
        let (coeffs, residual) = project_onto_span(&bases, &point_inv);
        assert!(residual < 1e-8, "point left the span: residual {residual}");
        for ((c, &a), &b) in coeffs.iter().zip(&b1).zip(&b2) {
            let expected = a + t * (b - a);
            assert!(
                (c - expected).abs() < 1e-8,
                "coefficient {c} vs linear interpolation {expected}"
            );
        }
    }
}

#[test]
fn mixture_geodesic_preserves_shared_observed_block() {
    // Two completions sharing the observed block: every point of the mixture
    // geodesic keeps that block bit-for-bit.
    let mut r = rng(777);
    let observed = random_pd(3, 0.5, &mut r);
    let m1 = random_pd(5, 0.5, &mut r);
    let m2 = random_pd(5, 0.5, &mut r);
    let (dvh1, dhh1) = e_step(&observed, &m1).unwrap();
    let (dvh2, dhh2) = e_step(&observed, &m2).unwrap();
    let d1 = assemble_completion(&observed, &dvh1, &dhh1);
    let d2 = assemble_completion(&observed, &dvh2, &dhh2);
    for &t in &[0.0, 0.37, 0.9, 1.0] {
        let point = geodesic_point(&d1, &d2, t, GeodesicKind::Mixture).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    point.get(i, j).to_bits(),
                    observed.get(i, j).to_bits(),
                    "observed block moved at t = {t}"
                );
            }
        }
    }
}
