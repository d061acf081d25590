//! Diagonal solutions: infinite products on the q-side, closed polar factors
//! times the integrated summed positive part on the differential side.

use crate::domain::{LogPoint, QParam};
use crate::error::{Error, Result};
use crate::operators::{FactoredDifferentialOperator, FactoredQOperator};
use crate::qfunctions::{ln1p_c, qexp_ln, ThetaEvaluator};
use crate::summation::SummedPositivePart;
use num_complex::Complex64 as C64;

/// Relative size below which a product factor counts as 1.
pub const PRODUCT_TOLERANCE: f64 = 1e-16;
pub const MAX_PRODUCT_TERMS: usize = 1_000_000;
const CONSECUTIVE: usize = 8;

/// `(ℓ, f̃_{j,ℓ}/ℓ)` for the negative exponents of `f̃_j`.
fn polar_terms(op: &FactoredDifferentialOperator, j: usize) -> Vec<(i32, C64)> {
    op.nonpositive(j)
        .terms()
        .filter(|(e, _)| *e < 0)
        .map(|(e, c)| (e, c / e as f64))
        .collect()
}

/// `q^{−i} z` from the exponent, so deep spiral points carry no drift.
pub(crate) fn spiral_point(z: &LogPoint, i: i64, q: QParam) -> Result<LogPoint> {
    LogPoint::new((z.modulus().ln() - i as f64 * q.ln_q()).exp(), z.argument())
}

/// `u_j(z,q) = w_j·Λ_{q,c_j}·∏_ℓ e_{q^{|ℓ|}}((f̃_{j,ℓ}/ℓ)z^ℓ)·∏_{ν≤−1}(1+(q−1)f_j^{>0}(q^ν z))`.
#[derive(Clone, Debug)]
pub struct QDiagonal {
    op: FactoredQOperator,
    polar: Vec<Vec<(i32, C64)>>,
    consts: Vec<C64>,
    theta: ThetaEvaluator,
    tol: f64,
}

impl QDiagonal {
    /// `diff` supplies the polar coefficients `f̃_{j,ℓ}`, `ℓ < 0`.
    pub fn new(op: FactoredQOperator, diff: &FactoredDifferentialOperator) -> Result<Self> {
        if op.order() != diff.order() {
            return Err(Error::InvalidOperator(format!(
                "q-operator has order {} but the differential operator has order {}",
                op.order(),
                diff.order()
            )));
        }
        let polar = (0..diff.order()).map(|j| polar_terms(diff, j)).collect();
        let consts = op
            .families()
            .iter()
            .map(|f| f.c_inf())
            .collect::<Result<Vec<_>>>()?;
        let theta = ThetaEvaluator::new(op.q());
        Ok(Self {
            op,
            polar,
            consts,
            theta,
            tol: PRODUCT_TOLERANCE,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn q(&self) -> QParam {
        self.op.q()
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn operator(&self) -> &FactoredQOperator {
        &self.op
    }

    /// `c_j`, the value at infinity of `1+(q−1)f_j^{≤0}`.
    pub fn lambda_constant(&self, j: usize) -> C64 {
        self.consts[j]
    }

    /// `ln g_j(z)`.
    pub fn ln_g(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let g = self.op.family(j).g(z)?;
        if g.norm() == 0.0 || !g.re.is_finite() || !g.im.is_finite() {
            return Err(Error::Pole {
                location: format!("z = {}", z.to_complex()),
                detail: format!("g_{} = {g}", j + 1),
            });
        }
        Ok(g.ln())
    }

    /// `Σ_ℓ ln e_{q^{|ℓ|}}((f̃_{j,ℓ}/ℓ) z^ℓ)`.
    pub fn ln_polar(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let q = self.q().q();
        let mut acc = C64::new(0.0, 0.0);
        for &(l, c) in &self.polar[j] {
            acc += qexp_ln(c * z.pow_int(l).to_complex(), q.powi(-l))?;
        }
        Ok(acc)
    }

    /// `ln w_j(z) = −Σ_{k≥0} ln h_j(q^k z)`, where
    /// `h_j = (1+(q−1)f_j^{≤0}) ∏_ℓ (1+(1−q^ℓ)(f̃_{j,ℓ}/ℓ)z^ℓ) / c_j`.
    pub fn ln_w(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let q = self.q();
        let fam = self.op.family(j);
        let mut acc = C64::new(0.0, 0.0);
        let mut small = 0;
        for k in 0..MAX_PRODUCT_TERMS {
            let t = spiral_point(z, -(k as i64), q)?;
            let mut h = fam.g_nonpositive(&t)? / self.consts[j];
            for &(l, c) in &self.polar[j] {
                h *= 1.0 + (1.0 - q.q().powi(l)) * c * t.pow_int(l).to_complex();
            }
            let d = h - 1.0;
            acc -= ln1p_c(d);
            if d.norm() < self.tol {
                small += 1;
                if small >= CONSECUTIVE {
                    return Ok(acc);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: format!("product w_{}", j + 1),
            terms: MAX_PRODUCT_TERMS,
            tail: f64::NAN,
        })
    }

    /// `Σ_{ν≤−1} ln(1+(q−1)f_j^{>0}(q^ν z))`.
    pub fn ln_positive_tail(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let fam = self.op.family(j);
        if fam.positive().is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut small = 0;
        for nu in 1..=MAX_PRODUCT_TERMS {
            let t = spiral_point(z, nu as i64, self.q())?;
            let d = fam.g_positive(&t)? - 1.0;
            acc += ln1p_c(d);
            if d.norm() < self.tol {
                small += 1;
                if small >= CONSECUTIVE {
                    return Ok(acc);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: format!("positive-part product of u_{}", j + 1),
            terms: MAX_PRODUCT_TERMS,
            tail: f64::NAN,
        })
    }

    /// `ln u_j(z,q)` on the Riemann surface of the logarithm.
    pub fn ln_u(&self, j: usize, z: &LogPoint) -> Result<C64> {
        Ok(self.ln_w(j, z)?
            + self.theta.lambda_ln(z, self.consts[j])?
            + self.ln_polar(j, z)?
            + self.ln_positive_tail(j, z)?)
    }

    pub fn u(&self, j: usize, z: &LogPoint) -> Result<C64> {
        checked_exp(self.ln_u(j, z)?, "u_j")
    }
}

pub(crate) fn checked_exp(l: C64, what: &str) -> Result<C64> {
    if l.re > 709.0 {
        return Err(Error::Overflow(format!("{what}: log-modulus {:.1}", l.re)));
    }
    Ok(l.exp())
}

/// `ũ_j(z) = z^{f̃_{j,0}}·exp(Σ_ℓ (f̃_{j,ℓ}/ℓ) z^ℓ)·exp(∫_0^z S̃^d(f̃_j^{>0}) dt/t)`.
#[derive(Clone, Debug)]
pub struct DiffDiagonal {
    op: FactoredDifferentialOperator,
    polar: Vec<Vec<(i32, C64)>>,
    summed: Vec<SummedPositivePart>,
}

impl DiffDiagonal {
    pub fn new(op: FactoredDifferentialOperator, summed: Vec<SummedPositivePart>) -> Result<Self> {
        if summed.len() != op.order() {
            return Err(Error::InvalidParameter(format!(
                "{} summed positive parts for an operator of order {}",
                summed.len(),
                op.order()
            )));
        }
        let polar = (0..op.order()).map(|j| polar_terms(&op, j)).collect();
        Ok(Self { op, polar, summed })
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    pub fn operator(&self) -> &FactoredDifferentialOperator {
        &self.op
    }

    pub fn summed(&self, j: usize) -> &SummedPositivePart {
        &self.summed[j]
    }

    pub fn ln_u(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let mut acc = self.op.constant(j) * z.ln();
        for &(l, c) in &self.polar[j] {
            acc += c * z.pow_int(l).to_complex();
        }
        if !self.summed[j].is_zero() {
            acc += self.summed[j].integrated(z)?;
        }
        Ok(acc)
    }

    pub fn u(&self, j: usize, z: &LogPoint) -> Result<C64> {
        checked_exp(self.ln_u(j, z)?, "ũ_j")
    }

    /// `f̃_j^{≤0}(z) + S̃^d(f̃_j^{>0})(z)`.
    pub fn coefficient(&self, j: usize, z: &LogPoint) -> Result<C64> {
        let mut c = self.op.nonpositive(j).eval(z.to_complex());
        if !self.summed[j].is_zero() {
            c += self.summed[j].eval(z)?;
        }
        Ok(c)
    }
}
