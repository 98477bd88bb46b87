use std::f64::consts::PI;

use proptest::prelude::*;
use pulsations::averaging::{extract_envelope, extract_envelope_with, Projection};
use pulsations::envelope::{
    amplitude_quadratic, amplitude_roots, fd_gradient, AveragedReduction, PlanarHamiltonian,
    PrintedHamiltonian,
};
use pulsations::floquet::{integral_index, monodromy, DEFAULT_STEP};
use pulsations::integrators::{abm4_integrate, rk4_integrate, FnField, IntegrationGrid};
use pulsations::{Complex64, Error, FloquetResult, NondimParams, TimeSeries};

fn np(varepsilon: f64) -> NondimParams {
    NondimParams {
        lambda: 3.0,
        varepsilon,
        f: 1.0,
        mu: 0.1,
        delta: 1.0,
    }
}

/// `εy = Re(k e^{iθ}) + c₂ cos 2θ + s₃ sin 3θ` sampled over whole periods.
fn harmonic_series(
    eps: f64,
    k: Complex64,
    c2: f64,
    s3: f64,
    samples: usize,
    periods: usize,
) -> TimeSeries {
    let h = 2.0 * PI / samples as f64;
    let n = samples * periods;
    let grid = IntegrationGrid::with_steps(0.0, h, n).unwrap();
    let mut data = Vec::with_capacity(4 * (n + 1));
    for i in 0..=n {
        let t = grid.time(i);
        let ey =
            (k * Complex64::new(t.cos(), t.sin())).re + c2 * (2.0 * t).cos() + s3 * (3.0 * t).sin();
        data.extend_from_slice(&[0.0, 0.0, ey / eps, 0.0]);
    }
    TimeSeries::from_rows(grid, 1, 4, data).unwrap()
}

/// End-point error of `u'' = −u` from `(1, 0)` over `[0, 5]`.
fn oscillator_error(abm: bool, h: f64) -> f64 {
    let field = FnField::new(2, |_: f64, y: &[f64], out: &mut [f64]| {
        out[0] = y[1];
        out[1] = -y[0];
    });
    let grid = IntegrationGrid::new(0.0, 5.0, h).unwrap();
    let ts = if abm {
        abm4_integrate(&field, &[1.0, 0.0], &grid)
    } else {
        rk4_integrate(&field, &[1.0, 0.0], &grid)
    }
    .unwrap();
    let t = ts.time(ts.len() - 1);
    (ts.last()[0] - t.cos()).abs()
}

#[test]
fn integrators_are_fourth_order() {
    for abm in [false, true] {
        let (e1, e2) = (oscillator_error(abm, 0.02), oscillator_error(abm, 0.01));
        let order = (e1 / e2).log2();
        assert!((3.7..4.3).contains(&order), "abm = {abm}: order {order}");
    }
}

#[test]
fn rk4_is_exact_on_cubic_quadrature() {
    let field = FnField::new(1, |t: f64, _: &[f64], out: &mut [f64]| {
        out[0] = 4.0 * t * t * t - 3.0 * t * t + 1.0
    });
    let grid = IntegrationGrid::new(0.0, 2.0, 0.25).unwrap();
    let ts = rk4_integrate(&field, &[0.5], &grid).unwrap();
    for (i, row) in ts.rows().enumerate() {
        let t = ts.time(i);
        let exact = 0.5 + t.powi(4) - t.powi(3) + t;
        assert!((row[0] - exact).abs() < 1e-13, "t = {t}");
    }
}

/// Monodromy, rejecting the case where the solution passes the divergence threshold.
fn bounded_monodromy(q: f64, r: f64) -> Result<FloquetResult, TestCaseError> {
    match monodromy(q, r, DEFAULT_STEP) {
        Ok(fr) => Ok(fr),
        Err(Error::NonFiniteState { .. }) => Err(TestCaseError::reject("diverged")),
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monodromy_is_unimodular(q in -10.0f64..60.0, r in 0.0f64..60.0) {
        let fr = bounded_monodromy(q, r)?;
        // products of entries of size |M| cancel in the determinant
        let norm2: f64 = fr.monodromy.iter().flatten().map(|v| v * v).sum();
        prop_assert!(fr.det_residual.abs() < 1e-13 * norm2.max(1.0), "det − 1 = {}, |M|² = {norm2}", fr.det_residual);
    }

    #[test]
    fn sign_of_r_is_a_phase_shift(q in 0.0f64..60.0, r in 0.0f64..60.0) {
        let a = bounded_monodromy(q, r)?;
        let b = bounded_monodromy(q, -r)?;
        prop_assert!((a.trace - b.trace).abs() <= 1e-9 * a.trace.abs().max(1.0));
        prop_assert!((a.re_lambda1 - b.re_lambda1).abs() <= 1e-10);
    }

    #[test]
    fn stability_iff_trace_bounded(q in -5.0f64..60.0, r in 0.0f64..60.0) {
        let fr = bounded_monodromy(q, r)?;
        prop_assert_eq!(fr.trace.abs() <= 2.0, fr.re_lambda1 == 0.0);
        prop_assert!(fr.re_lambda1 >= 0.0);
    }

    #[test]
    fn projection_recovers_first_harmonic(
        k1 in -5.0f64..5.0, k2 in -5.0f64..5.0, c2 in -3.0f64..3.0, s3 in -3.0f64..3.0, eps in 0.05f64..0.5,
    ) {
        let k = Complex64::new(k1, k2);
        let ts = harmonic_series(eps, k, c2, s3, 64, 3);
        let full = extract_envelope(&ts, &np(eps)).unwrap();
        let half = extract_envelope_with(&ts, &np(eps), Projection::Half).unwrap();
        prop_assert_eq!(full.len(), 3);
        for (a, b) in full.k.iter().zip(&half.k) {
            prop_assert!((a - k).norm() < 1e-12 * (1.0 + k.norm()));
            prop_assert!((b - 0.5 * k).norm() < 1e-12 * (1.0 + k.norm()));
        }
    }

    #[test]
    fn projection_parseval(k1 in -5.0f64..5.0, k2 in -5.0f64..5.0, eps in 0.05f64..0.5) {
        // a pure first harmonic: (1/π)∫(εy)² over a period equals |k|²
        let k = Complex64::new(k1, k2);
        let ts = harmonic_series(eps, k, 0.0, 0.0, 64, 1);
        let h = ts.sample_step();
        let energy: f64 = (0..64).map(|i| (eps * ts.row(i)[2]).powi(2)).sum::<f64>() * h / PI;
        let got = extract_envelope(&ts, &np(eps)).unwrap().k[0];
        prop_assert!((energy - got.norm_sqr()).abs() < 1e-10 * (1.0 + energy));
    }

    #[test]
    fn printed_gradient_matches_differences(rho in 0.05f64..0.9, phi in 0.0f64..(2.0 * PI)) {
        let h = PrintedHamiltonian::new(1.3, 0.8).unwrap();
        let (k1, k2) = (rho * phi.cos(), rho * phi.sin());
        let v = h.value(k1, k2);
        prop_assume!(matches!(v, Ok(v) if v.abs() < 5.0));
        let g = h.gradient(k1, k2).unwrap();
        let fd = fd_gradient(&h, k1, k2, 1e-6).unwrap();
        let scale = g.0.hypot(g.1);
        prop_assert!((g.0 - fd.0).hypot(g.1 - fd.1) < 1e-5 * scale.max(1e-3));
    }

    #[test]
    fn reduction_gradient_matches_differences(rho in 0.0f64..0.9, phi in 0.0f64..(2.0 * PI)) {
        let h = AveragedReduction::new(3.0, 1.0, 1.0).unwrap();
        let (k1, k2) = (rho * phi.cos(), rho * phi.sin());
        let g = h.gradient(k1, k2).unwrap();
        let fd = fd_gradient(&h, k1, k2, 1e-6).unwrap();
        prop_assert!((g.0 - fd.0).hypot(g.1 - fd.1) < 1e-6 * g.0.hypot(g.1).max(1e-6));
    }

    #[test]
    fn flows_are_reversible(rho in 0.05f64..0.9, phi in 0.0f64..(2.0 * PI)) {
        // H is even in K₂, so the reflection K₂ → −K₂ reverses the flow
        let (k1, k2) = (rho * phi.cos(), rho * phi.sin());
        let printed = PrintedHamiltonian::new(1.0, 1.0).unwrap();
        let reduced = AveragedReduction::new(3.0, 1.0, 1.0).unwrap();
        let hs: [&dyn PlanarHamiltonian; 2] = [&printed, &reduced];
        for h in hs {
            let (Ok(a), Ok(b)) = (h.vector_field(k1, k2), h.vector_field(k1, -k2)) else { continue };
            let tol = 1e-9 * a.0.hypot(a.1).max(1e-12);
            prop_assert!((a.0 + b.0).abs() <= tol && (a.1 - b.1).abs() <= tol, "{a:?} vs {b:?}");
            prop_assert!((h.value(k1, k2).unwrap() - h.value(k1, -k2).unwrap()).abs() <= 1e-12 * h.value(k1, k2).unwrap().abs());
        }
    }

    #[test]
    fn amplitude_roots_back_substitute(h0 in prop_oneof![0.05f64..2.0, -5.0f64..-0.05], a in 0.5f64..2.0, w in 0.5f64..2.0) {
        let Ok((rm, rp)) = amplitude_roots(h0, a, w) else { return Ok(()) };
        let (al, be, ga) = amplitude_quadratic(h0, a, w);
        for r in [rm, rp] {
            let resid = al * r * r - be * r + ga;
            prop_assert!(resid.abs() <= 1e-9 * (al * r * r).abs().max(be * r).abs().max(ga.abs()).max(1e-12));
        }
    }

    #[test]
    fn amplitude_roots_are_axis_crossings(h0 in 0.05f64..0.3, a in 0.8f64..1.2) {
        // on K₂ = 0 the printed H is −c/(1 + K₁ + √(1 − K₁²)); an admissible root
        // r with |r| < 1 is a point where it equals −H₀
        let h = PrintedHamiltonian::new(a, 1.0).unwrap();
        let c = h.prefactor() / h0;
        let Ok((rm, rp)) = amplitude_roots(h0, a, 1.0) else { return Ok(()) };
        for r in [rm, rp] {
            if r.abs() >= 0.999 || c - 1.0 - r < 0.0 {
                continue;
            }
            let Ok(v) = h.value(r, 0.0) else { continue };
            prop_assert!((v + h0).abs() < 1e-9 * h0, "H({r}, 0) = {v}, H₀ = {h0}");
        }
    }

    #[test]
    fn integral_index_without_modulation(mu in 0.0f64..0.3, q in 1.0f64..30.0) {
        let big_q = q - 4.0 * mu * mu;
        prop_assume!((big_q.sqrt() - big_q.sqrt().round()).abs() > 0.05);
        let tau: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let r = vec![0.0; tau.len()];
        let ix = integral_index(&tau, &r, q, mu, DEFAULT_STEP).unwrap();
        for (t, l) in ix.tau.iter().zip(&ix.lambda) {
            prop_assert!((l + 2.0 * mu * t).abs() < 1e-12 * (1.0 + t));
        }
    }
}
