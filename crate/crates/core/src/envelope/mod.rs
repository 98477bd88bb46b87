//! The large-λ envelope reduction: asymptotic fast response, planar
//! Hamiltonians for `K = k/λ²`, their flows, amplitude roots and periods.

mod flow;
mod hamiltonian;
mod level;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use flow::{
    classify, envelope_flow, find_equilibrium, flow_until_exit, period_by_contour, period_by_flow,
    vector_field_index, EnvelopeState, Equilibrium, EquilibriumKind, FlowPeriod, FlowTrajectory,
    HESSIAN_STEP, STEPS_PER_PERIOD,
};
pub use hamiltonian::{
    fd_gradient, hessian, AveragedReduction, PlanarHamiltonian, PrintedHamiltonian, DOMAIN_MARGIN,
    SINGULAR_DENOMINATOR,
};
pub use level::{
    amplitude_quadratic, amplitude_radical, amplitude_roots, dual_period, level_set_summary,
    DualPeriod, LevelSetSummary, PeriodInUnits, REFERENCE_PERIOD, REFERENCE_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::oscillator::NondimParams;

/// The printed centre `(1/√2, 0)`.
pub const PRINTED_CENTRE: (f64, f64) = (std::f64::consts::FRAC_1_SQRT_2, 0.0);

/// Smallest admissible value of `2 − λ⁻²|r|`.
pub const MIN_DENOMINATOR: f64 = 0.1;

/// Leading-order particular solution of the forced Mathieu equation,
/// `λ⁻² · 2f cos(s − a/2) / (2 − λ⁻² r cos 2s)`, accurate to O(λ⁻⁴).
pub fn x0_asymptotic(s: f64, r: f64, a: f64, np: &NondimParams) -> Result<f64> {
    let l2 = np.lambda * np.lambda;
    let min_den = 2.0 - r.abs() / l2;
    if min_den < MIN_DENOMINATOR {
        return Err(Error::DenominatorNearZero {
            min_denominator: min_den,
        });
    }
    Ok(2.0 * np.f * (s - 0.5 * a).cos() / (l2 * (2.0 - r * (2.0 * s).cos() / l2)))
}

/// `(x, x', y, y') = (f/λ², 0, −λ²/(ε√2), 0)`.
pub fn stationary_initial_data(np: &NondimParams) -> [f64; 4] {
    let l2 = np.lambda * np.lambda;
    [
        np.f / l2,
        0.0,
        -l2 / (np.varepsilon * std::f64::consts::SQRT_2),
        0.0,
    ]
}

/// Direction comparison between a brute-force average and a Hamiltonian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionCheck {
    pub k1: f64,
    pub k2: f64,
    /// `dK/dt` from averaging `x₀² e^{−iθ}`, in the Hamiltonian's flow time.
    pub averaged: (f64, f64),
    /// `(∂H/∂K₂, −∂H/∂K₁)`
    pub hamiltonian: (f64, f64),
    /// Angle between the two, radians in `[0, π]`.
    pub angle: f64,
    /// `|averaged| / |hamiltonian|`
    pub scale: f64,
}

/// `⟨x₀² e^{−iθ}⟩` over `n_periods` windows of 2π with `samples` nodes each,
/// with `x₀` from [`x0_asymptotic`] at `r = 2|k|`, `a = arg k`, `s = (θ + a)/2`.
pub fn averaged_forcing(
    k: Complex64,
    np: &NondimParams,
    n_periods: usize,
    samples: usize,
) -> Result<Complex64> {
    let (r, a) = (2.0 * k.norm(), k.arg());
    let n = n_periods * samples;
    let dtheta = 2.0 * std::f64::consts::PI / samples as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let theta = i as f64 * dtheta;
        let x = x0_asymptotic(0.5 * (theta + a), r, a, np)?;
        acc += x * x * Complex64::new(theta.cos(), -theta.sin());
    }
    Ok(acc / n as f64)
}

/// Compares `dK/dτ = −iδλ⁻²⟨x₀² e^{−iθ}⟩`, converted to the flow time of `h`
/// by `tau_per_flow_unit = dτ/d(flow time)`, with the field of `h`.
pub fn reduction_consistency<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    np: &NondimParams,
    points: &[(f64, f64)],
    tau_per_flow_unit: f64,
) -> Result<Vec<DirectionCheck>> {
    let l2 = np.lambda * np.lambda;
    points
        .iter()
        .map(|&(k1, k2)| {
            let avg = averaged_forcing(Complex64::new(k1, k2) * l2, np, 64, 256)?;
            let dk = Complex64::new(0.0, -np.delta) * avg / l2 * tau_per_flow_unit;
            let hf = h.vector_field(k1, k2)?;
            let dot = dk.re * hf.0 + dk.im * hf.1;
            let cross = dk.re * hf.1 - dk.im * hf.0;
            let hn = hf.0.hypot(hf.1);
            Ok(DirectionCheck {
                k1,
                k2,
                averaged: (dk.re, dk.im),
                hamiltonian: hf,
                angle: cross.abs().atan2(dot),
                scale: dk.norm() / hn,
            })
        })
        .collect()
}
