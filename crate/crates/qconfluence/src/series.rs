//! Truncated Laurent series with complex coefficients.
//!
//! A series carries an explicit truncation order: exponents at or above it are
//! unknown, which is different from being zero. Exact Laurent polynomials use
//! [`EXACT`] as their truncation order.

use crate::domain::QParam;
use crate::error::{Error, Result};
use crate::qfunctions::{ln_gamma_p_real, ln_gamma_real};
use num_complex::Complex64 as C64;
use std::fmt;

/// Truncation order of an exact (finite) Laurent polynomial.
pub const EXACT: i32 = i32::MAX;

/// Default truncation order for series produced by inversion.
pub const DEFAULT_ORDER: i32 = 64;

/// z-adic valuation; `Infinite` is the valuation of the zero series and orders
/// after every finite value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

fn shift_order(t: i32, k: i32) -> i32 {
    if t == EXACT {
        EXACT
    } else {
        t.saturating_add(k).min(EXACT - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    min_exponent: i32,
    coeffs: Vec<C64>,
    truncation: i32,
}

impl LaurentSeries {
    /// Build from a dense coefficient list starting at `min_exponent`.
    /// Leading and trailing zeros are stripped, and coefficients at or above
    /// the truncation order are dropped.
    pub fn new(min_exponent: i32, coeffs: Vec<C64>, truncation: i32) -> Self {
        let mut s = Self {
            min_exponent,
            coeffs,
            truncation,
        };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let keep = (self.truncation as i64 - self.min_exponent as i64).max(0);
        if (self.coeffs.len() as i64) > keep {
            self.coeffs.truncate(keep as usize);
        }
        while matches!(self.coeffs.last(), Some(c) if *c == C64::new(0.0, 0.0)) {
            self.coeffs.pop();
        }
        let lead = self
            .coeffs
            .iter()
            .position(|c| *c != C64::new(0.0, 0.0))
            .unwrap_or(self.coeffs.len());
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.min_exponent += lead as i32;
        }
        if self.coeffs.is_empty() {
            self.min_exponent = 0;
        }
    }

    /// Sparse constructor from `(exponent, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms(terms: &[(i32, C64)], truncation: i32) -> Self {
        if terms.is_empty() {
            return Self::zero(truncation);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for &(e, c) in terms {
            coeffs[(e - lo) as usize] += c;
        }
        Self::new(lo, coeffs, truncation)
    }

    /// An exact Laurent polynomial.
    pub fn polynomial(terms: &[(i32, C64)]) -> Self {
        Self::from_terms(terms, EXACT)
    }

    pub fn zero(truncation: i32) -> Self {
        Self {
            min_exponent: 0,
            coeffs: Vec::new(),
            truncation,
        }
    }

    pub fn one() -> Self {
        Self::monomial(C64::new(1.0, 0.0), 0)
    }

    pub fn monomial(c: C64, e: i32) -> Self {
        Self::new(e, vec![c], EXACT)
    }

    pub fn truncation_order(&self) -> i32 {
        self.truncation
    }

    pub fn is_exact(&self) -> bool {
        self.truncation == EXACT
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Restrict to a (lower) truncation order.
    pub fn truncate(&self, order: i32) -> Self {
        Self::new(self.min_exponent, self.coeffs.clone(), self.truncation.min(order))
    }

    pub fn valuation(&self) -> Valuation {
        if self.is_zero() {
            Valuation::Infinite
        } else {
            Valuation::Finite(self.min_exponent)
        }
    }

    /// Leading coefficient, with `t_0(0) = 0`.
    pub fn leading(&self) -> C64 {
        self.coeffs.first().copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn min_exponent(&self) -> i32 {
        self.min_exponent
    }

    /// Largest stored exponent, `None` for zero.
    pub fn max_exponent(&self) -> Option<i32> {
        if self.is_zero() {
            None
        } else {
            Some(self.min_exponent + self.coeffs.len() as i32 - 1)
        }
    }

    /// Coefficient of `z^e` (zero when not stored).
    pub fn coeff(&self, e: i32) -> C64 {
        let i = e as i64 - self.min_exponent as i64;
        if i < 0 || i >= self.coeffs.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Nonzero terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != C64::new(0.0, 0.0))
            .map(move |(i, c)| (self.min_exponent + i as i32, *c))
    }

    // effective low exponent used by the product truncation rule; a zero series is O(z^t)
    fn low(&self) -> i32 {
        if self.is_zero() {
            self.truncation
        } else {
            self.min_exponent
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let t = self.truncation.min(other.truncation);
        if self.is_zero() {
            return other.truncate(t);
        }
        if other.is_zero() {
            return self.truncate(t);
        }
        let lo = self.min_exponent.min(other.min_exponent);
        let hi = self.max_exponent().unwrap().max(other.max_exponent().unwrap());
        let hi = hi.min(shift_order(t, -1));
        if hi < lo {
            return Self::zero(t);
        }
        let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
        for e in lo..=hi {
            let (a, b) = (self.coeff(e), other.coeff(e));
            // keep disjoint supports bit-exact
            coeffs.push(if b == C64::new(0.0, 0.0) {
                a
            } else if a == C64::new(0.0, 0.0) {
                b
            } else {
                a + b
            });
        }
        Self::new(lo, coeffs, t)
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiply by a scalar.
    pub fn scale(&self, c: C64) -> Self {
        Self::new(
            self.min_exponent,
            self.coeffs.iter().map(|a| a * c).collect(),
            self.truncation,
        )
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: i32) -> Self {
        Self::new(
            self.min_exponent + k,
            self.coeffs.clone(),
            shift_order(self.truncation, k),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let t = shift_order(self.truncation, other.low()).min(shift_order(other.truncation, self.low()));
        if self.is_zero() || other.is_zero() {
            return Self::zero(t);
        }
        let lo = self.min_exponent + other.min_exponent;
        let hi_full = self.max_exponent().unwrap() + other.max_exponent().unwrap();
        let hi = hi_full.min(shift_order(t, -1));
        if hi < lo {
            return Self::zero(t);
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (k, b) in other.coeffs.iter().enumerate() {
                let idx = i + k;
                if idx >= coeffs.len() {
                    break;
                }
                coeffs[idx] += a * b;
            }
        }
        Self::new(lo, coeffs, t)
    }

    /// Multiplicative inverse, truncated at `min(t − 2v, DEFAULT_ORDER)`.
    pub fn invert(&self) -> Result<Self> {
        self.invert_to(DEFAULT_ORDER)
    }

    /// Multiplicative inverse with an explicit absolute truncation cap.
    pub fn invert_to(&self, cap: i32) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroLeadingTerm);
        }
        let v = self.min_exponent;
        let t = shift_order(self.truncation, -2 * v).min(cap);
        let n = (t as i64 + v as i64).max(0) as usize;
        let a0 = self.coeffs[0];
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            if i == 0 {
                b.push(C64::new(1.0, 0.0) / a0);
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in 1..=i.min(self.coeffs.len() - 1) {
                acc += self.coeffs[k] * b[i - k];
            }
            b.push(-acc / a0);
        }
        Ok(Self::new(-v, b, t))
    }

    /// `s(cz)`, the σ_q action for `c = q`.
    pub fn scale_argument(&self, c: C64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * c.powi(self.min_exponent + i as i32))
            .collect();
        Self::new(self.min_exponent, coeffs, self.truncation)
    }

    /// Split into the parts with exponents ≤ 0 and ≥ 1.
    pub fn split_parts(&self) -> (Self, Self) {
        let mut nonpos = Vec::new();
        let mut pos = Vec::new();
        for (e, c) in self.terms() {
            if e <= 0 {
                nonpos.push((e, c));
            } else {
                pos.push((e, c));
            }
        }
        let t_nonpos = if self.truncation >= 1 { EXACT } else { self.truncation };
        (
            Self::from_terms(&nonpos, t_nonpos),
            Self::from_terms(&pos, self.truncation.max(1)),
        )
    }

    /// Evaluate the stored terms at `z`.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.min_exponent)
    }

    /// `z d/dz` applied termwise.
    pub fn delta(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * (self.min_exponent + i as i32) as f64)
            .collect();
        Self::new(self.min_exponent, coeffs, self.truncation)
    }

    fn require_power_series(&self, min: i32, what: &str) -> Result<()> {
        if !self.is_zero() && self.min_exponent < min {
            return Err(Error::InvalidParameter(format!(
                "{what} needs exponents ≥ {min}, found z^{}",
                self.min_exponent
            )));
        }
        Ok(())
    }

    /// Formal Borel transform of order `k`: `a_ℓ ↦ a_ℓ/Γ(1+ℓ/k)`.
    pub fn formal_borel(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("Borel order must be positive".into()));
        }
        self.require_power_series(0, "formal Borel transform")?;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.indexed() {
            out.push(c / gamma_one_plus(e as f64 / k as f64)?);
        }
        Ok(Self::new(self.min_exponent, out, self.truncation))
    }

    /// Coefficients of the q-deformed positive part:
    /// `a_n ↦ a_n Γ_p(1+n/ℓ)/Γ(1+n/ℓ)`.
    pub fn q_borel_deform_coeffs(&self, level: u32, q: QParam) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("level must be positive".into()));
        }
        self.require_power_series(1, "q-Borel deformation")?;
        let p = q.p();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.indexed() {
            let x = 1.0 + e as f64 / level as f64;
            let r = (ln_gamma_p_real(x, p)? - ln_gamma_real(x)?).exp();
            out.push(c * r);
        }
        Ok(Self::new(self.min_exponent, out, self.truncation))
    }

    /// The inverse of the deformation, `a_n ↦ a_n/Γ_p(1+n/ℓ)`: the q-Borel
    /// image as a power series in ζ.
    pub fn q_borel(&self, level: u32, q: QParam) -> Result<Self> {
        self.require_power_series(0, "q-Borel transform")?;
        let p = q.p();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, c) in self.indexed() {
            let x = 1.0 + e as f64 / level as f64;
            out.push(c * (-ln_gamma_p_real(x, p)?).exp());
        }
        Ok(Self::new(self.min_exponent, out, self.truncation))
    }

    fn indexed(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.min_exponent + i as i32, *c))
    }

    /// Root-test radius estimate from the stored coefficients. Returns
    /// `f64::INFINITY` for exact polynomials and `0.0` when the estimate
    /// collapses along the tail (a divergent series).
    pub fn empirical_radius(&self) -> f64 {
        if self.is_exact() || self.coeffs.len() < 8 {
            return f64::INFINITY;
        }
        let roots: Vec<(i32, f64)> = self
            .terms()
            .filter(|(e, _)| *e > 0)
            .map(|(e, c)| (e, c.norm().powf(-1.0 / e as f64)))
            .collect();
        if roots.len() < 4 {
            return f64::INFINITY;
        }
        let quarter = roots[roots.len() / 4].1;
        let tail = &roots[roots.len() * 3 / 4..];
        let last = tail.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        if last < 0.5 * quarter && roots.last().unwrap().1 < 0.5 * quarter {
            0.0
        } else {
            last
        }
    }
}

fn gamma_one_plus(x: f64) -> Result<f64> {
    if x == x.round() && x <= 170.0 {
        return Ok((1..=x as u64).map(|k| k as f64).product());
    }
    Ok(ln_gamma_real(1.0 + x)?.exp())
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({}{:+}i)", c.re, c.im)?;
            }
            match e {
                0 => {}
                1 => write!(f, "·z")?,
                _ => write!(f, "·z^{e}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        if !self.is_exact() {
            write!(f, " + O(z^{})", self.truncation)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn valuation_and_leading() {
        let s = LaurentSeries::polynomial(&[(-2, c(-2.0)), (1, c(1.0))]);
        assert_eq!((s.valuation(), s.leading()), (Valuation::Finite(-2), c(-2.0)));
        let z = LaurentSeries::zero(EXACT);
        assert_eq!((z.valuation(), z.leading()), (Valuation::Infinite, c(0.0)));
        let s = LaurentSeries::polynomial(&[(0, c(3.0)), (5, c(1.0))]);
        assert_eq!((s.valuation(), s.leading()), (Valuation::Finite(0), c(3.0)));
        assert!(Valuation::Finite(1000) < Valuation::Infinite);
    }

    #[test]
    fn invert_geometric() {
        let s = LaurentSeries::polynomial(&[(0, c(1.0)), (1, c(1.0))]);
        let inv = s.invert().unwrap();
        for e in 0..10 {
            assert_eq!(inv.coeff(e), c(if e % 2 == 0 { 1.0 } else { -1.0 }));
        }
        let prod = s.mul(&inv);
        assert_eq!(prod.coeff(0), c(1.0));
        for e in 1..prod.truncation_order() {
            assert_eq!(prod.coeff(e), c(0.0));
        }
        assert!(LaurentSeries::zero(10).invert().is_err());
    }

    #[test]
    fn invert_laurent() {
        let s = LaurentSeries::polynomial(&[(-2, c(2.0)), (0, c(1.0))]);
        let inv = s.invert_to(20).unwrap();
        let prod = s.mul(&inv);
        assert_eq!(prod.valuation(), Valuation::Finite(0));
        for e in 1..prod.truncation_order() {
            assert!(prod.coeff(e).norm() < 1e-15);
        }
    }

    #[test]
    fn scale_argument_example() {
        let q = c(1.5);
        let s = LaurentSeries::polynomial(&[(-1, c(1.0)), (1, c(1.0))]).scale_argument(q);
        assert!((s.coeff(-1) - 1.0 / 1.5).norm() < 1e-16);
        assert_eq!(s.coeff(1), c(1.5));
    }

    #[test]
    fn split_examples() {
        let s = LaurentSeries::polynomial(&[(-2, c(-2.0))]);
        let (a, b) = s.split_parts();
        assert_eq!(a, s);
        assert!(b.is_zero());
        let s = LaurentSeries::polynomial(&[(-1, c(1.0)), (0, c(3.0)), (2, c(1.0))]);
        let (a, b) = s.split_parts();
        assert_eq!(a, LaurentSeries::polynomial(&[(-1, c(1.0)), (0, c(3.0))]));
        assert_eq!(b, LaurentSeries::polynomial(&[(2, c(1.0))]));
        let (a, b) = LaurentSeries::zero(EXACT).split_parts();
        assert!(a.is_zero() && b.is_zero());
    }

    #[test]
    fn borel_examples() {
        // Euler series Σ(−1)^n n! z^{n+1}
        let mut terms = Vec::new();
        let mut fact = 1.0;
        for n in 0..20 {
            if n > 0 {
                fact *= n as f64;
            }
            terms.push((n + 1, c(if n % 2 == 0 { fact } else { -fact })));
        }
        let s = LaurentSeries::from_terms(&terms, 21);
        let b = s.formal_borel(1).unwrap();
        for n in 0..20 {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 } / (n as f64 + 1.0);
            assert!((b.coeff(n + 1).re - want).abs() < 1e-14 * want.abs());
        }
        assert_eq!(LaurentSeries::one().formal_borel(3).unwrap(), LaurentSeries::one());
        let z2 = LaurentSeries::monomial(c(1.0), 2);
        assert_eq!(z2.formal_borel(2).unwrap(), z2);
        let neg = LaurentSeries::monomial(c(1.0), -1);
        assert!(neg.formal_borel(1).is_err());
    }

    #[test]
    fn q_deform_examples() {
        let q = QParam::new(2.0).unwrap();
        assert!(LaurentSeries::zero(EXACT).q_borel_deform_coeffs(1, q).unwrap().is_zero());
        let z = LaurentSeries::monomial(c(1.0), 1);
        let d = z.q_borel_deform_coeffs(1, q).unwrap();
        assert!((d.coeff(1) - 1.0).norm() < 1e-14);
        let d = LaurentSeries::monomial(c(1.0), 2).q_borel_deform_coeffs(1, q).unwrap();
        assert!((d.coeff(2) - 0.75).norm() < 1e-14);
    }

    #[test]
    fn radius_estimates() {
        let geo: Vec<(i32, C64)> = (1..40).map(|n| (n, c(1.0))).collect();
        let r = LaurentSeries::from_terms(&geo, 40).empirical_radius();
        assert!((r - 1.0).abs() < 1e-12);
        let mut fact = 1.0;
        let euler: Vec<(i32, C64)> = (0..60)
            .map(|n| {
                if n > 0 {
                    fact *= n as f64;
                }
                (n + 1, c(fact))
            })
            .collect();
        assert_eq!(LaurentSeries::from_terms(&euler, 61).empirical_radius(), 0.0);
        assert_eq!(
            LaurentSeries::polynomial(&[(1, c(2.0))]).empirical_radius(),
            f64::INFINITY
        );
    }
}
