//! Canonical flow, equilibria and orbit periods of a planar Hamiltonian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::hamiltonian::{check_domain, hessian, PlanarHamiltonian};
use crate::error::{invalid, Error, Result};
use crate::numerics::bisect;

/// Finite-difference step used for Hessians.
pub const HESSIAN_STEP: f64 = 1e-5;

/// Steps per characteristic time in [`envelope_flow`] defaults.
pub const STEPS_PER_PERIOD: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeState {
    pub k1: f64,
    pub k2: f64,
}

impl EnvelopeState {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        check_domain(k1, k2)?;
        Ok(Self { k1, k2 })
    }

    pub fn norm(&self) -> f64 {
        self.k1.hypot(self.k2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    /// Definite Hessian: closed orbits around it.
    Centre,
    /// Indefinite Hessian.
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub k1: f64,
    pub k2: f64,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian: [[f64; 2]; 2],
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    pub fn hessian_det(&self) -> f64 {
        self.hessian[0][0] * self.hessian[1][1] - self.hessian[0][1] * self.hessian[1][0]
    }

    /// `2π/√det Hess` for a centre; for a saddle the same expression with
    /// `|det|` is the e-folding time scale of the linearization.
    pub fn linear_period(&self) -> f64 {
        2.0 * PI / self.hessian_det().abs().sqrt()
    }
}

pub fn classify<H: PlanarHamiltonian + ?Sized>(h: &H, k1: f64, k2: f64) -> Result<Equilibrium> {
    let hs = hessian(h, k1, k2, HESSIAN_STEP)?;
    let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
    let scale = hs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let kind = if det.abs() <= 1e-8 * scale * scale {
        EquilibriumKind::Degenerate
    } else if det > 0.0 {
        EquilibriumKind::Centre
    } else {
        EquilibriumKind::Saddle
    };
    let (g1, g2) = h.gradient(k1, k2)?;
    Ok(Equilibrium {
        k1,
        k2,
        value: h.value(k1, k2)?,
        gradient_norm: g1.hypot(g2),
        hessian: hs,
        kind,
    })
}

/// Newton iteration on `∇H = 0` from `seed`, with a finite-difference Hessian.
pub fn find_equilibrium<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    seed: (f64, f64),
) -> Result<Equilibrium> {
    let (mut k1, mut k2) = seed;
    let g0 = {
        let (a, b) = h.gradient(k1, k2)?;
        a.hypot(b)
    };
    for _ in 0..100 {
        let (g1, g2) = h.gradient(k1, k2)?;
        let gn = g1.hypot(g2);
        if gn == 0.0 {
            break;
        }
        let hs = hessian(h, k1, k2, HESSIAN_STEP)?;
        let det = hs[0][0] * hs[1][1] - hs[0][1] * hs[1][0];
        if det == 0.0 {
            return Err(Error::NoConvergence(
                "singular Hessian in Newton step".into(),
            ));
        }
        let d1 = (hs[1][1] * g1 - hs[0][1] * g2) / det;
        let d2 = (hs[0][0] * g2 - hs[1][0] * g1) / det;
        k1 -= d1;
        k2 -= d2;
        if d1.hypot(d2) < 1e-14 {
            break;
        }
    }
    let eq = classify(h, k1, k2)?;
    if !(eq.gradient_norm <= 1e-10 * g0.max(1e-300) || eq.gradient_norm < 1e-13) {
        return Err(Error::NoConvergence(format!(
            "gradient norm {} after Newton from ({}, {})",
            eq.gradient_norm, seed.0, seed.1
        )));
    }
    Ok(eq)
}

fn rk4_step<H: PlanarHamiltonian + ?Sized>(h: &H, k: (f64, f64), dt: f64) -> Result<(f64, f64)> {
    let f1 = h.vector_field(k.0, k.1)?;
    let f2 = h.vector_field(k.0 + 0.5 * dt * f1.0, k.1 + 0.5 * dt * f1.1)?;
    let f3 = h.vector_field(k.0 + 0.5 * dt * f2.0, k.1 + 0.5 * dt * f2.1)?;
    let f4 = h.vector_field(k.0 + dt * f3.0, k.1 + dt * f3.1)?;
    Ok((
        k.0 + dt / 6.0 * (f1.0 + 2.0 * f2.0 + 2.0 * f3.0 + f4.0),
        k.1 + dt / 6.0 * (f1.1 + 2.0 * f2.1 + 2.0 * f3.1 + f4.1),
    ))
}

fn step_guarded<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    k: (f64, f64),
    dt: f64,
    t: f64,
) -> Result<(f64, f64)> {
    match rk4_step(h, k, dt) {
        Err(Error::DomainError { .. }) => Err(Error::LeftDomain { tau: t }),
        other => {
            let next = other?;
            check_domain(next.0, next.1).map_err(|_| Error::LeftDomain { tau: t + dt })?;
            Ok(next)
        }
    }
}

/// RK4 trajectory of the canonical flow with the Hamiltonian value monitored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub t: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub h: Vec<f64>,
}

impl FlowTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `max |H(t) − H(0)| / |H(0)|`.
    pub fn max_relative_drift(&self) -> f64 {
        let h0 = self.h[0];
        self.h
            .iter()
            .map(|v| ((v - h0) / h0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_displacement(&self) -> f64 {
        let (a, b) = (self.k1[0], self.k2[0]);
        self.k1
            .iter()
            .zip(&self.k2)
            .map(|(x, y)| (x - a).hypot(y - b))
            .fold(0.0, f64::max)
    }
}

fn check_flow_args(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(invalid("t_end", "must be positive"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    Ok(((t_end / dt).round() as usize).max(1))
}

/// Integrates the canonical flow up to `t_end` with `round(t_end/dt)` steps.
/// Leaving the domain `|K|² ≤ 1 − 1e-9` is an error.
pub fn envelope_flow<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    init: EnvelopeState,
    t_end: f64,
    dt: f64,
) -> Result<FlowTrajectory> {
    let (traj, exit) = flow_until_exit(h, init, t_end, dt)?;
    match exit {
        Some(tau) => Err(Error::LeftDomain { tau }),
        None => Ok(traj),
    }
}

/// Like [`envelope_flow`] but stops at the domain boundary and reports where.
pub fn flow_until_exit<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    init: EnvelopeState,
    t_end: f64,
    dt: f64,
) -> Result<(FlowTrajectory, Option<f64>)> {
    let n = check_flow_args(t_end, dt)?;
    let dt = t_end / n as f64;
    let mut k = (init.k1, init.k2);
    let mut traj = FlowTrajectory {
        t: vec![0.0],
        k1: vec![k.0],
        k2: vec![k.1],
        h: vec![h.value(k.0, k.1)?],
    };
    for i in 0..n {
        let t = i as f64 * dt;
        k = match step_guarded(h, k, dt, t) {
            Ok(next) => next,
            Err(Error::LeftDomain { tau }) => return Ok((traj, Some(tau))),
            Err(e) => return Err(e),
        };
        traj.t.push(t + dt);
        traj.k1.push(k.0);
        traj.k2.push(k.1);
        traj.h.push(h.value(k.0, k.1)?);
    }
    Ok((traj, None))
}

/// Return time of the flow to the ray from `centre` through `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPeriod {
    pub period: f64,
    /// Relative Hamiltonian drift over the orbit.
    pub h_drift: f64,
    /// Distance between start and return point.
    pub closure_error: f64,
}

/// Measures the period by following the flow until the polar angle about
/// `centre` has advanced by 2π, interpolating the crossing time.
pub fn period_by_flow<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    centre: (f64, f64),
    start: EnvelopeState,
    dt: f64,
    max_time: f64,
) -> Result<FlowPeriod> {
    let n_max = check_flow_args(max_time, dt)?;
    let angle = |k: (f64, f64)| (k.1 - centre.1).atan2(k.0 - centre.0);
    let mut k = (start.k1, start.k2);
    let h0 = h.value(k.0, k.1)?;
    let mut unwrapped = 0.0;
    let mut prev = angle(k);
    let mut drift = 0.0f64;
    for i in 0..n_max {
        let t = i as f64 * dt;
        let next = step_guarded(h, k, dt, t)?;
        let a = angle(next);
        let mut da = a - prev;
        if da > PI {
            da -= 2.0 * PI;
        } else if da < -PI {
            da += 2.0 * PI;
        }
        let before = unwrapped;
        unwrapped += da;
        drift = drift.max(((h.value(next.0, next.1)? - h0) / h0).abs());
        if unwrapped.abs() >= 2.0 * PI {
            let frac = (2.0 * PI - before.abs()) / da.abs();
            let period = t + frac * dt;
            let kx = k.0 + frac * (next.0 - k.0);
            let ky = k.1 + frac * (next.1 - k.1);
            return Ok(FlowPeriod {
                period,
                h_drift: drift,
                closure_error: (kx - start.k1).hypot(ky - start.k2),
            });
        }
        prev = a;
        k = next;
    }
    Err(Error::NotClosedOrbit(format!(
        "angle about the centre advanced {unwrapped:.3} rad within {max_time}"
    )))
}

/// Radius along the ray `centre + ρ(cos φ, sin φ)` where `H = level`, found
/// by scanning outward for the first sign change and bisecting.
fn ray_root<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    centre: (f64, f64),
    phi: f64,
    level: f64,
    hint: f64,
) -> Result<f64> {
    let (c, s) = (phi.cos(), phi.sin());
    let g = |rho: f64| {
        h.value(centre.0 + rho * c, centre.1 + rho * s)
            .map(|v| v - level)
    };
    let g0 = g(0.0)?;
    let mut step = (hint / 8.0).max(1e-12);
    let mut lo = 0.0;
    loop {
        let hi = lo + step;
        let v = match g(hi) {
            Ok(v) => v,
            Err(_) if step > 1e-14 => {
                // the ray leaves the disk: approach the boundary more cautiously
                step *= 0.25;
                continue;
            }
            Err(_) => {
                return Err(Error::TurningPointResolution(format!(
                    "level not reached along φ = {phi:.4} before leaving the domain"
                )))
            }
        };
        if v == 0.0 {
            return Ok(hi);
        }
        if v.signum() != g0.signum() {
            let root = bisect(lo, hi, 1e-15, |r| g(r).unwrap_or(f64::NAN)).ok_or_else(|| {
                Error::TurningPointResolution(format!("bisection failed along φ = {phi:.4}"))
            })?;
            return Ok(root);
        }
        lo = hi;
        if lo > 2.0 {
            return Err(Error::TurningPointResolution(format!(
                "no crossing along φ = {phi:.4}"
            )));
        }
        step *= 1.25;
    }
}

/// Period from the line integral `∮ dK₁ / (∂H/∂K₂)` over the level set
/// through `start`. The orbit is parametrized by its polar angle about the
/// centre; where `|∂H/∂K₂|` is the smaller gradient component (near turning
/// points of `K₁`) the equivalent `−∮ dK₂ / (∂H/∂K₁)` is used instead.
pub fn period_by_contour<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    centre: (f64, f64),
    start: EnvelopeState,
    n_nodes: usize,
) -> Result<f64> {
    if n_nodes < 16 {
        return Err(invalid("n_nodes", "need at least 16"));
    }
    let level = h.value(start.k1, start.k2)?;
    let hint = (start.k1 - centre.0).hypot(start.k2 - centre.1);
    if hint == 0.0 {
        return Err(Error::NotClosedOrbit(
            "start coincides with the centre".into(),
        ));
    }
    let dphi = 2.0 * PI / n_nodes as f64;
    let mut total = 0.0;
    for j in 0..n_nodes {
        let phi = j as f64 * dphi;
        let rho = ray_root(h, centre, phi, level, hint)?;
        let (c, s) = (phi.cos(), phi.sin());
        let (k1, k2) = (centre.0 + rho * c, centre.1 + rho * s);
        let (g1, g2) = h.gradient(k1, k2)?;
        let radial = g1 * c + g2 * s;
        if radial == 0.0 {
            return Err(Error::TurningPointResolution(format!(
                "ray tangent to the level set at φ = {phi:.4}"
            )));
        }
        let drho = -rho * (g2 * c - g1 * s) / radial;
        let dk1 = drho * c - rho * s;
        let dk2 = drho * s + rho * c;
        total += if g2.abs() >= g1.abs() {
            dk1 / g2
        } else {
            -dk2 / g1
        };
    }
    Ok((total * dphi).abs())
}

/// Winding number of the vector field along a circle; +1 around a centre,
/// node or focus, −1 around a saddle.
pub fn vector_field_index<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    centre: (f64, f64),
    radius: f64,
    n: usize,
) -> Result<i32> {
    let mut total = 0.0;
    let field_angle = |phi: f64| -> Result<f64> {
        let (v1, v2) =
            h.vector_field(centre.0 + radius * phi.cos(), centre.1 + radius * phi.sin())?;
        Ok(v2.atan2(v1))
    };
    let mut prev = field_angle(0.0)?;
    for j in 1..=n {
        let a = field_angle(2.0 * PI * j as f64 / n as f64)?;
        let mut d = a - prev;
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        total += d;
        prev = a;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// H = (a K₁² + b K₂²)/2 about (0.1, 0): period 2π/√(ab).
    struct Ellipse {
        a: f64,
        b: f64,
    }

    impl PlanarHamiltonian for Ellipse {
        fn value(&self, k1: f64, k2: f64) -> Result<f64> {
            check_domain(k1, k2)?;
            let x = k1 - 0.1;
            Ok(0.5 * (self.a * x * x + self.b * k2 * k2) + 1.0)
        }
        fn gradient(&self, k1: f64, k2: f64) -> Result<(f64, f64)> {
            check_domain(k1, k2)?;
            Ok((self.a * (k1 - 0.1), self.b * k2))
        }
    }

    #[test]
    fn harmonic_periods() {
        let h = Ellipse { a: 2.0, b: 0.5 };
        let eq = find_equilibrium(&h, (0.3, 0.2)).unwrap();
        assert!((eq.k1 - 0.1).abs() < 1e-12 && eq.k2.abs() < 1e-12);
        assert_eq!(eq.kind, EquilibriumKind::Centre);
        assert!((eq.linear_period() - 2.0 * PI).abs() < 1e-8);
        let start = EnvelopeState::new(0.3, 0.0).unwrap();
        let fp = period_by_flow(&h, (0.1, 0.0), start, 2.0 * PI / 1000.0, 20.0).unwrap();
        assert!((fp.period - 2.0 * PI).abs() < 1e-5, "{}", fp.period);
        assert!(fp.closure_error < 1e-6);
        let pc = period_by_contour(&h, (0.1, 0.0), start, 256).unwrap();
        assert!((pc - 2.0 * PI).abs() < 1e-9, "{pc}");
        assert_eq!(vector_field_index(&h, (0.1, 0.0), 0.05, 64).unwrap(), 1);
    }

    #[test]
    fn saddle_classification() {
        struct S;
        impl PlanarHamiltonian for S {
            fn value(&self, a: f64, b: f64) -> Result<f64> {
                Ok(a * a - b * b + 1.0)
            }
            fn gradient(&self, a: f64, b: f64) -> Result<(f64, f64)> {
                Ok((2.0 * a, -2.0 * b))
            }
        }
        let eq = find_equilibrium(&S, (0.1, 0.1)).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::Saddle);
        assert_eq!(vector_field_index(&S, (0.0, 0.0), 0.1, 64).unwrap(), -1);
        let start = EnvelopeState::new(0.1, 0.0).unwrap();
        assert!(period_by_flow(&S, (0.0, 0.0), start, 1e-3, 5.0).is_err());
    }

    #[test]
    fn leaving_the_domain() {
        struct Drift;
        impl PlanarHamiltonian for Drift {
            fn value(&self, a: f64, b: f64) -> Result<f64> {
                check_domain(a, b)?;
                Ok(-b + 2.0)
            }
            fn gradient(&self, a: f64, b: f64) -> Result<(f64, f64)> {
                check_domain(a, b)?;
                Ok((0.0, -1.0))
            }
        }
        // dK₁/dt = −1
        let init = EnvelopeState::new(0.0, 0.0).unwrap();
        assert!(matches!(
            envelope_flow(&Drift, init, 2.0, 0.01),
            Err(Error::LeftDomain { .. })
        ));
        let (traj, exit) = flow_until_exit(&Drift, init, 2.0, 0.01).unwrap();
        let tau = exit.unwrap();
        assert!((tau - 1.0).abs() < 0.02, "{tau}");
        assert!(traj.k1.last().unwrap() > &-1.0);
    }
}
