//! Planar Hamiltonians for the rescaled envelope `K = k/λ²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points with `|K|² > 1 − DOMAIN_MARGIN` are rejected.
pub const DOMAIN_MARGIN: f64 = 1e-9;

/// `|D|` below this is a singular denominator.
pub const SINGULAR_DENOMINATOR: f64 = 1e-12;

pub(crate) fn check_domain(k1: f64, k2: f64) -> Result<f64> {
    let rho2 = k1 * k1 + k2 * k2;
    if !(rho2.is_finite() && rho2 <= 1.0 - DOMAIN_MARGIN) {
        return Err(Error::DomainError { k1, k2 });
    }
    Ok(rho2)
}

/// A Hamiltonian on the open unit disk with canonical flow
/// `dK₁/dt = ∂H/∂K₂`, `dK₂/dt = −∂H/∂K₁`.
pub trait PlanarHamiltonian: Sync {
    fn value(&self, k1: f64, k2: f64) -> Result<f64>;

    fn gradient(&self, k1: f64, k2: f64) -> Result<(f64, f64)>;

    fn vector_field(&self, k1: f64, k2: f64) -> Result<(f64, f64)> {
        let (g1, g2) = self.gradient(k1, k2)?;
        Ok((g2, -g1))
    }
}

impl<H: PlanarHamiltonian + ?Sized> PlanarHamiltonian for &H {
    fn value(&self, k1: f64, k2: f64) -> Result<f64> {
        (**self).value(k1, k2)
    }

    fn gradient(&self, k1: f64, k2: f64) -> Result<(f64, f64)> {
        (**self).gradient(k1, k2)
    }
}

/// ```text
/// H = A²/(2πΩ³) · (|K|² − K₁) / (K₁(1 − |K|²) − (|K|² − K₁)√(1 − |K|²))
/// ```
/// evaluated as written; its flow runs in `τ′ = λ⁻⁸τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedHamiltonian {
    pub a: f64,
    pub big_omega: f64,
}

impl PrintedHamiltonian {
    pub fn new(a: f64, big_omega: f64) -> Result<Self> {
        if !(a.is_finite() && big_omega.is_finite() && big_omega > 0.0) {
            return Err(invalid("hamiltonian", "A must be finite and Ω positive"));
        }
        Ok(Self { a, big_omega })
    }

    pub fn prefactor(&self) -> f64 {
        self.a * self.a / (2.0 * PI * self.big_omega.powi(3))
    }

    /// Numerator, denominator and `√(1 − |K|²)`.
    fn parts(&self, k1: f64, k2: f64) -> Result<(f64, f64, f64)> {
        let rho2 = check_domain(k1, k2)?;
        let w = (1.0 - rho2).sqrt();
        let n = rho2 - k1;
        let d = k1 * (1.0 - rho2) - n * w;
        if d.abs() < SINGULAR_DENOMINATOR {
            return Err(Error::SingularDenominator { k1, k2 });
        }
        Ok((n, d, w))
    }
}

impl PlanarHamiltonian for PrintedHamiltonian {
    fn value(&self, k1: f64, k2: f64) -> Result<f64> {
        let (n, d, _) = self.parts(k1, k2)?;
        Ok(self.prefactor() * n / d)
    }

    fn gradient(&self, k1: f64, k2: f64) -> Result<(f64, f64)> {
        let (n, d, w) = self.parts(k1, k2)?;
        let n1 = 2.0 * k1 - 1.0;
        let n2 = 2.0 * k2;
        let d1 = w * w - 2.0 * k1 * k1 - n1 * w + n * k1 / w;
        let d2 = -2.0 * k1 * k2 - n2 * w + n * k2 / w;
        let c = self.prefactor() / (d * d);
        Ok((c * (n1 * d - n * d1), c * (n2 * d - n * d2)))
    }
}

/// The envelope Hamiltonian obtained by averaging the leading-order fast
/// response `x₀ = λ⁻² f cos(θ/2) / (1 − Re(K e^{iθ}))` over θ:
///
/// ```text
/// H = δ f² λ⁻⁶ ⟨cos²(θ/2) / (1 − K₁ cos θ + K₂ sin θ)⟩
/// ```
///
/// Its canonical flow runs in the slow time `τ = ε²θ`. Averages are periodic
/// trapezoid sums with enough nodes to resolve the pole approaching the real
/// axis as `|K| → 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedReduction {
    pub lambda: f64,
    pub f: f64,
    pub delta: f64,
}

impl AveragedReduction {
    pub fn new(lambda: f64, f: f64, delta: f64) -> Result<Self> {
        if !(lambda.is_finite()
            && lambda > 0.0
            && f.is_finite()
            && delta.is_finite()
            && delta > 0.0)
        {
            return Err(invalid("reduction", "λ and δ must be positive, f finite"));
        }
        Ok(Self { lambda, f, delta })
    }

    /// `δ f² λ⁻⁶`
    pub fn scale(&self) -> f64 {
        self.delta * self.f * self.f / self.lambda.powi(6)
    }

    fn nodes(rho: f64) -> usize {
        // geometric convergence rate is acosh(1/ρ)
        let rate = if rho > 0.0 {
            (1.0 / rho).acosh()
        } else {
            f64::INFINITY
        };
        let n = (40.0 / rate).ceil().max(64.0);
        (n.min(16_777_216.0) as usize).next_multiple_of(16)
    }

    /// `(⟨g⟩, ⟨g cos θ / den⟩, ⟨−g sin θ / den⟩)` with `g = cos²(θ/2)/den`.
    fn averages(&self, k1: f64, k2: f64) -> Result<(f64, f64, f64)> {
        let rho2 = check_domain(k1, k2)?;
        let m = Self::nodes(rho2.sqrt());
        let step = 2.0 * PI / m as f64;
        let (mut v, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for j in 0..m {
            let (s, c) = (j as f64 * step).sin_cos();
            let den = 1.0 - k1 * c + k2 * s;
            let g = 0.5 * (1.0 + c) / den;
            v += g;
            g1 += g * c / den;
            g2 -= g * s / den;
        }
        let inv = 1.0 / m as f64;
        Ok((v * inv, g1 * inv, g2 * inv))
    }
}

impl PlanarHamiltonian for AveragedReduction {
    fn value(&self, k1: f64, k2: f64) -> Result<f64> {
        Ok(self.scale() * self.averages(k1, k2)?.0)
    }

    fn gradient(&self, k1: f64, k2: f64) -> Result<(f64, f64)> {
        let (_, g1, g2) = self.averages(k1, k2)?;
        Ok((self.scale() * g1, self.scale() * g2))
    }
}

/// Central finite-difference gradient.
pub fn fd_gradient<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    k1: f64,
    k2: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let d1 = (h.value(k1 + step, k2)? - h.value(k1 - step, k2)?) / (2.0 * step);
    let d2 = (h.value(k1, k2 + step)? - h.value(k1, k2 - step)?) / (2.0 * step);
    Ok((d1, d2))
}

/// Symmetric Hessian by central differences of the gradient.
pub fn hessian<H: PlanarHamiltonian + ?Sized>(
    h: &H,
    k1: f64,
    k2: f64,
    step: f64,
) -> Result<[[f64; 2]; 2]> {
    let (a1, a2) = h.gradient(k1 + step, k2)?;
    let (b1, b2) = h.gradient(k1 - step, k2)?;
    let (c1, c2) = h.gradient(k1, k2 + step)?;
    let (d1, d2) = h.gradient(k1, k2 - step)?;
    let h11 = (a1 - b1) / (2.0 * step);
    let h22 = (c2 - d2) / (2.0 * step);
    let h12 = 0.5 * ((a2 - b2) + (c1 - d1)) / (2.0 * step);
    Ok([[h11, h12], [h12, h22]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_values() {
        let h = PrintedHamiltonian::new(1.0, 1.0).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let v = h.value(c, 0.0).unwrap();
        assert!((v - (1.0 - 2f64.sqrt()) / (2.0 * PI)).abs() < 1e-14);
        let v = h.value(0.0, 0.5).unwrap();
        assert!((v + 2.0 / (3f64.sqrt() * 2.0 * PI)).abs() < 1e-14);
        assert!((v + 0.18378).abs() < 1e-5);
    }

    #[test]
    fn printed_errors() {
        let h = PrintedHamiltonian::new(1.0, 1.0).unwrap();
        assert!(matches!(h.value(1.0, 0.0), Err(Error::DomainError { .. })));
        assert!(matches!(h.value(0.6, 0.8), Err(Error::DomainError { .. })));
        assert!(matches!(
            h.value(0.0, 0.0),
            Err(Error::SingularDenominator { .. })
        ));
        assert!(PrintedHamiltonian::new(1.0, 0.0).is_err());
    }

    #[test]
    fn printed_axis_profile() {
        // on K₂ = 0 the printed H reduces to −1/(2π(1 + K₁ + √(1 − K₁²)))
        let h = PrintedHamiltonian::new(1.0, 1.0).unwrap();
        for x in [-0.9_f64, -0.5, 0.2, 0.5, 0.9] {
            let closed = -1.0 / (2.0 * PI * (1.0 + x + (1.0 - x * x).sqrt()));
            assert!((h.value(x, 0.0).unwrap() - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_matches_closed_form() {
        let red = AveragedReduction::new(1.0, 1.0, 1.0).unwrap();
        for (k1, k2) in [
            (0.0, 0.0),
            (-0.7, 0.1),
            (0.3, -0.6),
            (0.99, 0.0),
            (-0.5, 0.5),
        ] {
            let rho2: f64 = k1 * k1 + k2 * k2;
            let s = (1.0 - rho2).sqrt();
            let phi = (1.0 + k1 / (1.0 + s)) / (2.0 * s);
            let v = red.value(k1, k2).unwrap();
            assert!((v - phi).abs() < 1e-12 * phi, "{k1} {k2}: {v} vs {phi}");
        }
    }

    #[test]
    fn reduction_scale() {
        let red = AveragedReduction::new(3.0, 2.0, 0.5).unwrap();
        assert!((red.scale() - 2.0 / 729.0).abs() < 1e-16);
        let unit = AveragedReduction::new(1.0, 1.0, 1.0).unwrap();
        let (a, b) = (red.value(0.2, 0.1).unwrap(), unit.value(0.2, 0.1).unwrap());
        assert!((a - red.scale() * b).abs() < 1e-15);
    }

    #[test]
    fn hessian_of_quadratic() {
        struct Q;
        impl PlanarHamiltonian for Q {
            fn value(&self, a: f64, b: f64) -> Result<f64> {
                Ok(a * a + 3.0 * a * b - 2.0 * b * b)
            }
            fn gradient(&self, a: f64, b: f64) -> Result<(f64, f64)> {
                Ok((2.0 * a + 3.0 * b, 3.0 * a - 4.0 * b))
            }
        }
        let hs = hessian(&Q, 0.1, 0.2, 1e-4).unwrap();
        assert!((hs[0][0] - 2.0).abs() < 1e-9);
        assert!((hs[0][1] - 3.0).abs() < 1e-9);
        assert!((hs[1][1] + 4.0).abs() < 1e-9);
        let (g1, g2) = fd_gradient(&Q, 0.1, 0.2, 1e-5).unwrap();
        assert!((g1 - 0.8).abs() < 1e-9 && (g2 + 0.5).abs() < 1e-9);
        assert_eq!(Q.vector_field(1.0, 0.0).unwrap(), (3.0, -2.0));
    }
}
