//! The resonantly forced pair of coupled oscillators
//!
//! ```text
//! x'' + ν x' + ω² x = ϵ x y + A cos(Ω t / 2)
//! y''        + Ω² y = ϵ δ x²
//! ```
//!
//! together with its nondimensional form in `θ = Ω t` and the drivers used to
//! simulate it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrators::{
    drive, integrate_strided, IntegrationGrid, Method, TimeSeries, VectorField,
};
use crate::numerics::linear_fit;

/// Physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscParams {
    /// Fast eigenfrequency ω.
    pub omega: f64,
    /// Slow eigenfrequency Ω; the forcing oscillates at Ω/2.
    pub big_omega: f64,
    /// Forcing amplitude A.
    pub a: f64,
    /// Damping rate ν of `x`.
    pub nu: f64,
    /// Coupling strength ϵ.
    pub eps: f64,
    /// Mass ratio δ = m / (2M).
    pub delta: f64,
}

impl OscParams {
    /// ϵ = 0.2, Ω = 1, ω = 3, A = 1, ν = 0.1 and δ = 1.
    pub fn reference() -> Self {
        Self {
            omega: 3.0,
            big_omega: 1.0,
            a: 1.0,
            nu: 0.1,
            eps: 0.2,
            delta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega,
            self.big_omega,
            self.a,
            self.nu,
            self.eps,
            self.delta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("params", "non-finite value"));
        }
        if self.omega <= 0.0 {
            return Err(invalid("omega", "must be positive"));
        }
        if self.big_omega <= 0.0 {
            return Err(invalid("big_omega", "must be positive"));
        }
        if self.a < 0.0 {
            return Err(invalid("a", "must be non-negative"));
        }
        if self.nu < 0.0 {
            return Err(invalid("nu", "must be non-negative"));
        }
        if self.eps < 0.0 {
            return Err(invalid("eps", "must be non-negative"));
        }
        if self.delta <= 0.0 {
            return Err(invalid("delta", "must be positive"));
        }
        Ok(())
    }

    pub fn nondimensionalize(&self) -> NondimParams {
        nondimensionalize(self)
    }
}

/// Parameters of the system written in `θ = Ω t`:
///
/// ```text
/// x'' + μ x' + λ² x = ε x y + f cos(θ / 2)
/// y''       +     y = ε δ x²
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    /// λ = ω / Ω
    pub lambda: f64,
    /// ε = ϵ / Ω²
    pub varepsilon: f64,
    /// f = A / Ω²
    pub f: f64,
    /// μ = ν / Ω
    pub mu: f64,
    pub delta: f64,
}

impl NondimParams {
    /// Inverse of [`nondimensionalize`] for a chosen Ω.
    pub fn to_physical(&self, big_omega: f64) -> OscParams {
        OscParams {
            omega: self.lambda * big_omega,
            big_omega,
            a: self.f * big_omega * big_omega,
            nu: self.mu * big_omega,
            eps: self.varepsilon * big_omega * big_omega,
            delta: self.delta,
        }
    }

    /// Amplitude scale λ²/ε of the slow pulsations of `y`.
    pub fn pulsation_scale(&self) -> f64 {
        self.lambda * self.lambda / self.varepsilon
    }
}

pub fn nondimensionalize(p: &OscParams) -> NondimParams {
    let w2 = p.big_omega * p.big_omega;
    NondimParams {
        lambda: p.omega / p.big_omega,
        varepsilon: p.eps / w2,
        f: p.a / w2,
        mu: p.nu / p.big_omega,
        delta: p.delta,
    }
}

/// State `(x, x', y, y')` in physical time.
#[derive(Debug, Clone, Copy)]
pub struct CoupledField {
    pub params: OscParams,
}

impl VectorField for CoupledField {
    fn dimension(&self) -> usize {
        4
    }

    #[inline]
    fn eval(&self, t: f64, s: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let (x, xp, y) = (s[0], s[1], s[2]);
        out[0] = xp;
        out[1] = -p.nu * xp - p.omega * p.omega * x
            + p.eps * x * y
            + p.a * (0.5 * p.big_omega * t).cos();
        out[2] = s[3];
        out[3] = -p.big_omega * p.big_omega * y + p.eps * p.delta * x * x;
    }
}

pub fn coupled_field(p: &OscParams) -> Result<CoupledField> {
    p.validate()?;
    Ok(CoupledField { params: *p })
}

/// State `(x, x_θ, y, y_θ)` in `θ`.
#[derive(Debug, Clone, Copy)]
pub struct NondimField {
    pub params: NondimParams,
}

impl VectorField for NondimField {
    fn dimension(&self) -> usize {
        4
    }

    #[inline]
    fn eval(&self, theta: f64, s: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let (x, xp, y) = (s[0], s[1], s[2]);
        out[0] = xp;
        out[1] =
            -p.mu * xp - p.lambda * p.lambda * x + p.varepsilon * x * y + p.f * (0.5 * theta).cos();
        out[2] = s[3];
        out[3] = -y + p.varepsilon * p.delta * x * x;
    }
}

/// Slope `4 ε A² / (4ω² − Ω²)²` of the initial linear growth of the `y` envelope,
/// with ε = ϵ/Ω².
pub fn linear_growth_line(p: &OscParams) -> Result<f64> {
    p.validate()?;
    let denom = 4.0 * p.omega * p.omega - p.big_omega * p.big_omega;
    if denom.abs() <= 1e-12 * (4.0 * p.omega * p.omega) {
        return Err(Error::ResonantDenominator);
    }
    let varepsilon = p.eps / (p.big_omega * p.big_omega);
    Ok(4.0 * varepsilon * p.a * p.a / (denom * denom))
}

/// Default fixed step: 200 samples per period of the fastest frequency present.
pub fn default_step(p: &OscParams) -> f64 {
    2.0 * std::f64::consts::PI / (200.0 * p.omega.max(p.big_omega))
}

pub fn simulate(
    p: &OscParams,
    init: &[f64; 4],
    t_end: f64,
    h: f64,
    method: Method,
) -> Result<TimeSeries> {
    simulate_strided(p, init, t_end, h, method, 1)
}

/// Like [`simulate`] but keeps every `stride`-th state; long runs need this.
pub fn simulate_strided(
    p: &OscParams,
    init: &[f64; 4],
    t_end: f64,
    h: f64,
    method: Method,
    stride: usize,
) -> Result<TimeSeries> {
    let field = coupled_field(p)?;
    let grid = IntegrationGrid::new(0.0, t_end, h)?;
    integrate_strided(method, &field, init, &grid, stride)
}

/// Simulates the nondimensional system in `θ`; the time axis of the result is `θ`.
pub fn simulate_nondim(
    np: &NondimParams,
    init: &[f64; 4],
    theta_end: f64,
    h: f64,
    method: Method,
    stride: usize,
) -> Result<TimeSeries> {
    np.to_physical(1.0).validate()?;
    let grid = IntegrationGrid::new(0.0, theta_end, h)?;
    integrate_strided(method, &NondimField { params: *np }, init, &grid, stride)
}

/// Converts a physical state `(x, x_t, y, y_t)` to `(x, x_θ, y, y_θ)`.
pub fn state_to_theta(state: &[f64; 4], big_omega: f64) -> [f64; 4] {
    [
        state[0],
        state[1] / big_omega,
        state[2],
        state[3] / big_omega,
    ]
}

/// Per-period maxima of `|y|` from a run that is never stored: one window per
/// slow period `2π/Ω`, rounded to whole steps. Entries are `(window centre, max |y|)`.
pub fn slow_envelope(
    p: &OscParams,
    init: &[f64; 4],
    t_end: f64,
    h: f64,
    method: Method,
) -> Result<Vec<(f64, f64)>> {
    let field = coupled_field(p)?;
    let grid = IntegrationGrid::new(0.0, t_end, h)?;
    let window = ((2.0 * std::f64::consts::PI / p.big_omega) / h)
        .round()
        .max(1.0) as usize;
    let mut out = Vec::with_capacity(grid.n_steps / window + 1);
    let (mut current, mut start) = (0.0f64, 0.0);
    drive(method, &field, init, &grid, |step, t, y| {
        if step % window == 0 {
            if step > 0 {
                out.push((0.5 * (start + t), current));
            }
            start = t;
            current = 0.0;
        }
        current = current.max(y[2].abs());
    })?;
    Ok(out)
}

/// Local maxima of `|v|` as `(t, |v|)` pairs. Linear interpolation between them
/// is the envelope of the sampled oscillation.
pub fn envelope_maxima(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    (1..a.len().saturating_sub(1))
        .filter(|&i| a[i] >= a[i - 1] && a[i] > a[i + 1])
        .map(|i| (times[i], a[i]))
        .collect()
}

/// Piecewise-linear interpolation of an envelope given by its maxima.
pub fn envelope_at(maxima: &[(f64, f64)], t: f64) -> Option<f64> {
    let first = maxima.first()?;
    let last = maxima.last()?;
    if t < first.0 || t > last.0 {
        return None;
    }
    let idx = maxima.partition_point(|m| m.0 <= t);
    if idx == 0 {
        return Some(first.1);
    }
    if idx >= maxima.len() {
        return Some(last.1);
    }
    let (t0, v0) = maxima[idx - 1];
    let (t1, v1) = maxima[idx];
    Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

/// Maximum of `|v|` over consecutive windows of `window` samples, tagged with
/// the window centre time. One window per fast period gives a ripple-free
/// envelope.
pub fn window_maxima(times: &[f64], values: &[f64], window: usize) -> Vec<(f64, f64)> {
    if window == 0 {
        return Vec::new();
    }
    values
        .chunks_exact(window)
        .zip(times.chunks_exact(window))
        .map(|(v, t)| {
            let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            (0.5 * (t[0] + t[window - 1]), m)
        })
        .collect()
}

/// First index that is the maximum of the envelope over `[i − half_width, i + half_width]`.
pub fn first_slow_maximum(envelope: &[(f64, f64)], half_width: usize) -> Option<(f64, f64)> {
    let n = envelope.len();
    (1..n.saturating_sub(half_width)).find_map(|i| {
        let lo = i.saturating_sub(half_width);
        let v = envelope[i].1;
        let is_max = envelope[lo..=i + half_width].iter().all(|e| e.1 <= v) && v > envelope[0].1;
        is_max.then_some(envelope[i])
    })
}

/// Which quantity the linear-growth line describes best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeNormalization {
    Y,
    EpsY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Formula value `4 ε A² / (4ω² − Ω²)²`.
    pub formula: f64,
    /// Least-squares slope of the `|y|` maxima.
    pub slope_y: f64,
    /// Same for `|ε y|`.
    pub slope_eps_y: f64,
    pub ratio_y: f64,
    pub ratio_eps_y: f64,
    /// End of the fitting window.
    pub window_end: f64,
    pub n_maxima: usize,
    pub best: SlopeNormalization,
}

/// Fits the initial linear growth of the `y` envelope. The window runs from
/// `t = 0` until `|y|` first reaches 25% of λ²/ε (or to the end of the run).
pub fn fit_initial_slope(ts: &TimeSeries, p: &OscParams) -> Result<SlopeFit> {
    let formula = linear_growth_line(p)?;
    let np = nondimensionalize(p);
    let cutoff = 0.25 * np.pulsation_scale();
    let times = ts.times();
    let y = ts.column(2);
    let end = y.iter().position(|v| v.abs() >= cutoff).unwrap_or(y.len());
    let maxima = envelope_maxima(&times[..end], &y[..end]);
    if maxima.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: maxima.len(),
        });
    }
    let (tm, ym): (Vec<f64>, Vec<f64>) = maxima.iter().copied().unzip();
    let (slope_y, _) = linear_fit(&tm, &ym).ok_or(Error::TooFewPoints {
        required: 2,
        got: 1,
    })?;
    let slope_eps_y = np.varepsilon * slope_y;
    let ratio_y = slope_y / formula;
    let ratio_eps_y = slope_eps_y / formula;
    let best = if (ratio_y - 1.0).abs() <= (ratio_eps_y - 1.0).abs() {
        SlopeNormalization::Y
    } else {
        SlopeNormalization::EpsY
    };
    Ok(SlopeFit {
        formula,
        slope_y,
        slope_eps_y,
        ratio_y,
        ratio_eps_y,
        window_end: times[end.min(times.len()) - 1],
        n_maxima: maxima.len(),
        best,
    })
}
