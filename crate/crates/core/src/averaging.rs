//! Windowed check of the averaged envelope equation
//! `∂_τ k = −(iδ/T) ∫ x² e^{−iθ} dθ` against a simulated trajectory.
//!
//! All time series here use `θ` as their time axis and carry the state
//! `(x, x_θ, y, y_θ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrators::TimeSeries;
use crate::numerics::median;
use crate::oscillator::NondimParams;

/// Relative floor below which `|S_l|` is treated as zero.
pub const RELATIVE_FLOOR: f64 = 1e-8;

/// How the first harmonic of `εy` is normalized into `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `εy ≈ Re(k e^{iθ})`: `k₁ = (1/π)∫εy cos θ`, `k₂ = −(1/π)∫εy sin θ`.
    /// This is the normalization in which the averaged equation holds.
    #[default]
    Full,
    /// `εy ≈ 2 Re(k e^{iθ})`: the same integrals with `1/2π`.
    Half,
}

impl Projection {
    fn factor(self) -> f64 {
        match self {
            Projection::Full => 1.0 / PI,
            Projection::Half => 0.5 / PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeries {
    /// Slow time `τ = ε²θ` at window centres.
    pub tau: Vec<f64>,
    pub k: Vec<Complex64>,
}

impl EnvelopeSeries {
    pub fn new(tau: Vec<f64>, k: Vec<Complex64>) -> Result<Self> {
        if tau.len() != k.len() {
            return Err(Error::DimensionMismatch {
                expected: tau.len(),
                got: k.len(),
            });
        }
        if tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tau", "must be strictly increasing"));
        }
        Ok(Self { tau, k })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `r = 2|k|`, the modulation depth seen by the fast oscillator.
    pub fn modulation_depth(&self) -> Vec<f64> {
        self.k.iter().map(|k| 2.0 * k.norm()).collect()
    }
}

/// Number of samples per 2π of θ, or `WindowMismatch`.
pub fn samples_per_period(ts: &TimeSeries) -> Result<usize> {
    let exact = 2.0 * PI / ts.sample_step();
    let n = exact.round();
    if n < 1.0 || (exact - n).abs() > 1e-6 * n {
        return Err(Error::WindowMismatch {
            samples_per_window: exact,
        });
    }
    Ok(n as usize)
}

/// Projects `εy` onto the first harmonic over consecutive 2π windows of θ.
pub fn extract_envelope(ts: &TimeSeries, np: &NondimParams) -> Result<EnvelopeSeries> {
    extract_envelope_with(ts, np, Projection::Full)
}

pub fn extract_envelope_with(
    ts: &TimeSeries,
    np: &NondimParams,
    projection: Projection,
) -> Result<EnvelopeSeries> {
    let m = samples_per_period(ts)?;
    let dtheta = ts.sample_step();
    let scale = projection.factor() * np.varepsilon * dtheta;
    let n_windows = ts.len() / m;
    let mut tau = Vec::with_capacity(n_windows);
    let mut k = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in w * m..(w + 1) * m {
            let theta = ts.time(i);
            acc += ts.row(i)[2] * Complex64::new(theta.cos(), -theta.sin());
        }
        // rectangle rule on a full period = periodic trapezoid
        k.push(acc * scale);
        let centre = ts.time(w * m) + PI;
        tau.push(np.varepsilon * np.varepsilon * centre);
    }
    Ok(EnvelopeSeries { tau, k })
}

/// Central differences in τ, one-sided at both ends.
pub fn lhs_derivative(env: &EnvelopeSeries) -> Result<Vec<Complex64>> {
    let n = env.len();
    if n < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: n,
        });
    }
    let (t, k) = (&env.tau, &env.k);
    Ok((0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (k[b] - k[a]) / (t[b] - t[a])
        })
        .collect())
}

/// Default averaging length: the whole number of 2π periods closest to ε⁻².
pub fn default_window(np: &NondimParams) -> f64 {
    let periods = (1.0 / (np.varepsilon * np.varepsilon * 2.0 * PI))
        .round()
        .max(1.0);
    2.0 * PI * periods
}

fn window_rows(ts: &TimeSeries, centre: f64, window_len: f64) -> Result<std::ops::Range<usize>> {
    let dtheta = ts.sample_step();
    let from = centre - 0.5 * window_len;
    let to = centre + 0.5 * window_len;
    let start = ((from - ts.time(0)) / dtheta).round();
    let count = (window_len / dtheta).round();
    if !(window_len > 0.0) || start < 0.0 || count < 1.0 || start + count > ts.len() as f64 {
        return Err(Error::WindowOutOfRange { from, to });
    }
    Ok(start as usize..(start + count) as usize)
}

/// `−(iδ/T) ∫ x² e^{−iθ} dθ` over `[centre − T/2, centre + T/2)`.
pub fn rhs_average(
    ts: &TimeSeries,
    np: &NondimParams,
    centre: f64,
    window_len: f64,
) -> Result<Complex64> {
    let rows = window_rows(ts, centre, window_len)?;
    let count = rows.len() as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in rows {
        let theta = ts.time(i);
        let x = ts.row(i)[0];
        acc += x * x * Complex64::new(theta.cos(), -theta.sin());
    }
    Ok(Complex64::new(0.0, -np.delta) * acc / count)
}

/// The same average split into real equations:
/// `∂_τ k₁ = −δ⟨x² sin θ⟩`, `∂_τ k₂ = −δ⟨x² cos θ⟩`.
pub fn rhs_average_real(
    ts: &TimeSeries,
    np: &NondimParams,
    centre: f64,
    window_len: f64,
) -> Result<(f64, f64)> {
    let rows = window_rows(ts, centre, window_len)?;
    let count = rows.len() as f64;
    let (mut s, mut c) = (0.0, 0.0);
    for i in rows {
        let theta = ts.time(i);
        let x2 = ts.row(i)[0] * ts.row(i)[0];
        s += x2 * theta.sin();
        c += x2 * theta.cos();
    }
    Ok((-np.delta * s / count, -np.delta * c / count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub tau: Vec<f64>,
    pub k: Vec<Complex64>,
    pub lhs: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    /// `|S_l − S_r| / |S_l|`, `None` where `|S_l|` is below the floor.
    pub rel_error: Vec<Option<f64>>,
    /// τ span of the underlying trajectory.
    pub tau_range: (f64, f64),
}

impl ResidualReport {
    /// Median of the defined relative errors whose τ lies in the middle half of the run.
    pub fn median_middle_half(&self) -> Option<f64> {
        let (a, b) = self.tau_range;
        let (lo, hi) = (a + 0.25 * (b - a), a + 0.75 * (b - a));
        median(
            self.tau
                .iter()
                .zip(&self.rel_error)
                .filter(|(t, _)| **t >= lo && **t <= hi)
                .filter_map(|(_, e)| *e),
        )
    }

    pub fn n_missing(&self) -> usize {
        self.rel_error.iter().filter(|e| e.is_none()).count()
    }
}

/// Compares the difference derivative of the extracted envelope with the
/// windowed average at every envelope point whose averaging window fits.
pub fn residual_report(ts: &TimeSeries, np: &NondimParams) -> Result<ResidualReport> {
    residual_report_with_window(ts, np, default_window(np))
}

pub fn residual_report_with_window(
    ts: &TimeSeries,
    np: &NondimParams,
    window_len: f64,
) -> Result<ResidualReport> {
    let env = extract_envelope(ts, np)?;
    if env.len() < 5 {
        return Err(Error::TooFewPoints {
            required: 5,
            got: env.len(),
        });
    }
    let lhs_all = lhs_derivative(&env)?;
    let eps2 = np.varepsilon * np.varepsilon;
    let mut report = ResidualReport {
        tau: Vec::new(),
        k: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        rel_error: Vec::new(),
        tau_range: (eps2 * ts.time(0), eps2 * ts.time(ts.len() - 1)),
    };
    for (i, (&tau, &k)) in env.tau.iter().zip(&env.k).enumerate() {
        match rhs_average(ts, np, tau / eps2, window_len) {
            Ok(rhs) => {
                report.tau.push(tau);
                report.k.push(k);
                report.lhs.push(lhs_all[i]);
                report.rhs.push(rhs);
            }
            Err(Error::WindowOutOfRange { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let floor = RELATIVE_FLOOR * report.lhs.iter().map(|l| l.norm()).fold(0.0, f64::max);
    report.rel_error = report
        .lhs
        .iter()
        .zip(&report.rhs)
        .map(|(l, r)| {
            let n = l.norm();
            (n > 0.0 && n >= floor).then(|| (l - r).norm() / n)
        })
        .collect();
    Ok(report)
}

/// A trajectory that satisfies the averaged equation exactly:
/// `x = X cos(θ/2) + Z sin(3θ/2)` has `⟨x² e^{−iθ}⟩ = X²/4 − iXZ/2`, and `εy`
/// carries the linear envelope `k(τ) = k₀ + τ ∂_τk`.
pub fn manufactured_trajectory(
    np: &NondimParams,
    x_amp: f64,
    z_amp: f64,
    k0: Complex64,
    samples_per_period: usize,
    n_periods: usize,
) -> Result<(TimeSeries, Complex64)> {
    use crate::integrators::IntegrationGrid;
    if samples_per_period < 8 || n_periods < 1 {
        return Err(invalid(
            "manufactured",
            "need at least 8 samples per period and one period",
        ));
    }
    let slope =
        Complex64::new(0.0, -np.delta) * Complex64::new(0.25 * x_amp * x_amp, -0.5 * x_amp * z_amp);
    let h = 2.0 * PI / samples_per_period as f64;
    let n = samples_per_period * n_periods;
    let grid = IntegrationGrid::with_steps(0.0, h, n)?;
    let eps = np.varepsilon;
    let mut data = Vec::with_capacity(4 * (n + 1));
    for i in 0..=n {
        let theta = grid.time(i);
        let x = x_amp * (0.5 * theta).cos() + z_amp * (1.5 * theta).sin();
        let xp = -0.5 * x_amp * (0.5 * theta).sin() + 1.5 * z_amp * (1.5 * theta).cos();
        let phase = Complex64::new(theta.cos(), theta.sin());
        let k = k0 + slope * (eps * eps * theta);
        let y = (k * phase).re / eps;
        let yp = (k * Complex64::i() * phase + slope * eps * eps * phase).re / eps;
        data.extend_from_slice(&[x, xp, y, yp]);
    }
    Ok((TimeSeries::from_rows(grid, 1, 4, data)?, slope))
}
