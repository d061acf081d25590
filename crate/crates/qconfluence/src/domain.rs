//! Points on the Riemann surface of the logarithm, sectors and the q parameter.
//!
//! A [`LogPoint`] keeps its argument as an unbounded real number, so two points
//! that differ by a full turn are different values. Conversion to a plain
//! complex number is explicit and forgets the sheet.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point `r·e^{iθ}` of the universal cover of ℂ*.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    modulus: f64,
    argument: f64,
}

impl LogPoint {
    pub fn new(modulus: f64, argument: f64) -> Result<Self> {
        if !(modulus > 0.0) || !modulus.is_finite() || !argument.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "LogPoint needs a finite positive modulus and finite argument, got ({modulus}, {argument})"
            )));
        }
        Ok(Self { modulus, argument })
    }

    /// Lift a nonzero complex number to the principal sheet.
    pub fn from_complex(z: C64) -> Result<Self> {
        Self::new(z.norm(), z.arg())
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn argument(&self) -> f64 {
        self.argument
    }

    /// Lossy projection to ℂ*.
    pub fn to_complex(&self) -> C64 {
        C64::from_polar(self.modulus, self.argument)
    }

    /// The sheet-aware logarithm `ln r + iθ`.
    pub fn ln(&self) -> C64 {
        C64::new(self.modulus.ln(), self.argument)
    }

    /// `z^a = exp(a log z)`.
    pub fn power(&self, a: C64) -> C64 {
        (a * self.ln()).exp()
    }

    /// The ramification map `ρ_c`, `(r, θ) ↦ (r^c, cθ)`.
    pub fn ramify(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ramification exponent must be finite and nonzero, got {c}"
            )));
        }
        Self::new(self.modulus.powf(c), self.argument * c)
    }

    /// Integer power on the surface; `pow_int(0)` is the unit point.
    pub fn pow_int(&self, n: i32) -> Self {
        Self {
            modulus: self.modulus.powi(n),
            argument: self.argument * n as f64,
        }
    }

    /// `σ_q^k z = q^k z`.
    pub fn dilate(&self, k: i32, q: QParam) -> Self {
        Self {
            modulus: self.modulus * q.q().powi(k),
            argument: self.argument,
        }
    }

    /// Multiply the modulus by a positive real factor.
    pub fn scale(&self, s: f64) -> Result<Self> {
        Self::new(self.modulus * s, self.argument)
    }

    pub fn mul(&self, other: &LogPoint) -> Self {
        Self {
            modulus: self.modulus * other.modulus,
            argument: self.argument + other.argument,
        }
    }

    pub fn recip(&self) -> Self {
        Self {
            modulus: 1.0 / self.modulus,
            argument: -self.argument,
        }
    }

    pub fn rotate(&self, phi: f64) -> Self {
        Self {
            modulus: self.modulus,
            argument: self.argument + phi,
        }
    }
}

/// The open sector `D_{d,a,ε} = {arg ∈ (d−ε, d+ε), 0 < |z| < a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorDomain {
    direction: f64,
    half_width: f64,
    radius: f64,
}

impl SectorDomain {
    pub fn new(direction: f64, half_width: f64, radius: f64) -> Result<Self> {
        if !direction.is_finite() || !(half_width > 0.0) || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sector needs finite direction and positive width/radius, got ({direction}, {half_width}, {radius})"
            )));
        }
        Ok(Self {
            direction,
            half_width,
            radius,
        })
    }

    /// The whole surface.
    pub fn everywhere() -> Self {
        Self {
            direction: 0.0,
            half_width: f64::INFINITY,
            radius: f64::INFINITY,
        }
    }

    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, z: &LogPoint) -> bool {
        (z.argument - self.direction).abs() < self.half_width && z.modulus < self.radius
    }

    pub fn check(&self, z: &LogPoint, context: &str) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain {
                modulus: z.modulus,
                argument: z.argument,
                context: format!(" ({context})"),
            })
        }
    }
}

/// A real dilation parameter `q > 1`; `p = 1/q` is always recomputed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QParam {
    q: f64,
}

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "q must be a finite real number > 1, got {q}"
            )));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        1.0 / self.q
    }

    pub fn ln_q(&self) -> f64 {
        self.q.ln()
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Distance between two directions on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(2.0 * PI - d)
}
