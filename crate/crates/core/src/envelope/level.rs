//! Level sets of the envelope Hamiltonian: amplitude roots and periods.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::flow::{
    find_equilibrium, period_by_contour, period_by_flow, EnvelopeState, EquilibriumKind,
    STEPS_PER_PERIOD,
};
use super::hamiltonian::PlanarHamiltonian;
use crate::error::{invalid, Error, Result};

/// Reference period quoted for the reference parameters.
pub const REFERENCE_PERIOD: f64 = 5264.76;

/// Relative window for flagging a unit as matching [`REFERENCE_PERIOD`].
pub const REFERENCE_TOLERANCE: f64 = 0.05;

/// Radical `−A⁴ + 4A²πΩ³H₀ + 4π²Ω⁶H₀²` of the amplitude-root formula.
pub fn amplitude_radical(h0: f64, a: f64, big_omega: f64) -> f64 {
    let w3 = big_omega.powi(3);
    -a.powi(4) + 4.0 * a * a * PI * w3 * h0 + 4.0 * PI * PI * w3 * w3 * h0 * h0
}

/// Extreme envelope radii on the level `H₀`:
/// `r± = [(A² − 2πΩ³H₀) ± √radical] / (4πΩ³H₀)`.
pub fn amplitude_roots(h0: f64, a: f64, big_omega: f64) -> Result<(f64, f64)> {
    if !(h0.is_finite() && a.is_finite() && big_omega.is_finite() && big_omega > 0.0) {
        return Err(invalid(
            "amplitude_roots",
            "non-finite input or non-positive Ω",
        ));
    }
    if h0 == 0.0 {
        return Err(Error::ZeroLevel);
    }
    let mut radical = amplitude_radical(h0, a, big_omega);
    if radical < 0.0 {
        // a double root may round to a tiny negative radical
        if radical < -1e-14 * a.powi(4).max(f64::MIN_POSITIVE) {
            return Err(Error::InfeasibleLevel { h0 });
        }
        radical = 0.0;
    }
    let w3 = big_omega.powi(3);
    let b = a * a - 2.0 * PI * w3 * h0;
    let root = radical.sqrt();
    let denom = 4.0 * PI * w3 * h0;
    let (r1, r2) = ((b - root) / denom, (b + root) / denom);
    Ok((r1.min(r2), r1.max(r2)))
}

/// Coefficients `(α, β, γ)` of the quadratic `α r² − β r + γ = 0` whose roots
/// are [`amplitude_roots`].
pub fn amplitude_quadratic(h0: f64, a: f64, big_omega: f64) -> (f64, f64, f64) {
    let w3 = big_omega.powi(3);
    let alpha = 2.0 * PI * w3 * h0;
    let beta = a * a - alpha;
    let gamma = (a.powi(4) - 4.0 * PI * a * a * w3 * h0) / (4.0 * PI * w3 * h0);
    (alpha, beta, gamma)
}

/// A period expressed in the four time variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodInUnits {
    /// `τ′ = λ⁻⁸ τ`
    pub tau_prime: f64,
    /// `τ = ε² θ`
    pub tau: f64,
    /// `θ = Ω t`
    pub theta: f64,
    pub t: f64,
    /// Names of the variables within 5% of the reference period.
    pub matches_reference: Vec<String>,
}

impl PeriodInUnits {
    /// From a period measured in τ.
    pub fn from_tau(tau: f64, lambda: f64, varepsilon: f64, big_omega: f64) -> Self {
        let tau_prime = tau / lambda.powi(8);
        let theta = tau / (varepsilon * varepsilon);
        let t = theta / big_omega;
        let matches_reference = [
            ("tau_prime", tau_prime),
            ("tau", tau),
            ("theta", theta),
            ("t", t),
        ]
        .iter()
        .filter(|(_, v)| ((v - REFERENCE_PERIOD) / REFERENCE_PERIOD).abs() <= REFERENCE_TOLERANCE)
        .map(|(n, _)| n.to_string())
        .collect();
        Self {
            tau_prime,
            tau,
            theta,
            t,
            matches_reference,
        }
    }

    /// From a period measured in τ′ with `τ = λ⁸ τ′`.
    pub fn from_tau_prime(tau_prime: f64, lambda: f64, varepsilon: f64, big_omega: f64) -> Self {
        Self::from_tau(tau_prime * lambda.powi(8), lambda, varepsilon, big_omega)
    }
}

/// Period of one orbit computed by flow return time and by the contour integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPeriod {
    pub start: EnvelopeState,
    pub level: f64,
    pub flow: f64,
    pub contour: f64,
    pub h_drift: f64,
}

impl DualPeriod {
    pub fn relative_gap(&self) -> f64 {
        ((self.flow - self.contour) / self.contour).abs()
    }
}

/// Both period computations for the orbit through `start` around `centre`.
/// The flow step is `char_time / 1000`; the budget is twenty characteristic times.
pub fn dual_period<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    centre: (f64, f64),
    start: EnvelopeState,
    char_time: f64,
) -> Result<DualPeriod> {
    let dt = char_time / STEPS_PER_PERIOD as f64;
    let fp = period_by_flow(h, centre, start, dt, 20.0 * char_time)?;
    let contour = period_by_contour(h, centre, start, 1024)?;
    Ok(DualPeriod {
        start,
        level: h.value(start.k1, start.k2)?,
        flow: fp.period,
        contour,
        h_drift: fp.h_drift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub h0: f64,
    pub feasible: bool,
    pub r_minus: Option<f64>,
    pub r_plus: Option<f64>,
    /// Envelope amplitude estimate `(λ²/ε) max(|r₋|, |r₊|)`.
    pub max_y_estimate: Option<f64>,
    /// τ′-period of the orbit, when one exists.
    pub period_tau_prime: Option<f64>,
    /// `λ⁸/ε²` times the τ′-period.
    pub period_physical: Option<f64>,
    /// Why no period is reported.
    pub period_error: Option<String>,
}

/// Amplitude roots at `H₀` and, when the printed Hamiltonian `h` has closed
/// orbits about its equilibrium near `seed`, the period of the orbit through
/// the larger root on the `K₂ = 0` axis.
pub fn level_set_summary<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    h0: f64,
    a: f64,
    big_omega: f64,
    lambda: f64,
    varepsilon: f64,
    seed: (f64, f64),
) -> LevelSetSummary {
    let roots = amplitude_roots(h0, a, big_omega);
    let mut summary = LevelSetSummary {
        h0,
        feasible: roots.is_ok(),
        r_minus: roots.as_ref().ok().map(|r| r.0),
        r_plus: roots.as_ref().ok().map(|r| r.1),
        max_y_estimate: roots
            .as_ref()
            .ok()
            .map(|r| lambda * lambda / varepsilon * r.0.abs().max(r.1.abs())),
        period_tau_prime: None,
        period_physical: None,
        period_error: None,
    };
    let period = (|| -> Result<f64> {
        let (_, r_plus) = roots.clone()?;
        let eq = find_equilibrium(h, seed)?;
        if eq.kind != EquilibriumKind::Centre {
            return Err(Error::NotClosedOrbit(format!(
                "equilibrium at ({:.6}, {:.6}) is a {:?}",
                eq.k1, eq.k2, eq.kind
            )));
        }
        let start = EnvelopeState::new(r_plus, 0.0)?;
        Ok(dual_period(h, (eq.k1, eq.k2), start, eq.linear_period())?.contour)
    })();
    match period {
        Ok(p) => {
            summary.period_tau_prime = Some(p);
            summary.period_physical = Some(p * lambda.powi(8) / (varepsilon * varepsilon));
        }
        Err(e) => summary.period_error = Some(e.to_string()),
    }
    summary
}
