//! The q-coefficient family `f_j(z,q)` deforming `f̃_j`.
//!
//! The nonpositive part is an exact rational function of `w = 1/z` obtained by
//! a downward recursion from `f̃_m`. The positive part keeps the Borel image of
//! `f̃_j^{>0}` and applies the q-Laplace transform to it, or sums the
//! q-deformed series where that converges.

use crate::domain::{LogPoint, QParam};
use crate::error::{Error, Result};
use crate::operators::{FactoredDifferentialOperator, FactoredQOperator};
use crate::quadrature::{q_laplace_discrete, IntegrandFn};
use crate::series::{LaurentSeries, EXACT};
use crate::summation::{BorelImage, PositiveComponent};
use num_complex::Complex64 as C64;
use std::fmt;

fn strip(mut v: Vec<C64>) -> Vec<C64> {
    while v.len() > 1 && *v.last().unwrap() == C64::new(0.0, 0.0) {
        v.pop();
    }
    if v.is_empty() {
        v.push(C64::new(0.0, 0.0));
    }
    v
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    strip(out)
}

fn horner(c: &[C64], w: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * w + a)
}

/// `num(w)/den(w)` with `w = z^{−1}`; coefficient `i` multiplies `w^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalZinv {
    num: Vec<C64>,
    den: Vec<C64>,
}

impl RationalZinv {
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        let den = strip(den);
        if den.iter().all(|c| *c == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidParameter("rational function with zero denominator".into()));
        }
        Ok(Self {
            num: strip(num),
            den,
        })
    }

    pub fn one() -> Self {
        Self {
            num: vec![C64::new(1.0, 0.0)],
            den: vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn polynomial(coeffs: Vec<C64>) -> Self {
        Self {
            num: strip(coeffs),
            den: vec![C64::new(1.0, 0.0)],
        }
    }

    /// The Laurent polynomial `Σ_{e≤0} c_e z^e` as a polynomial in `w`.
    pub fn from_nonpositive(s: &LaurentSeries) -> Result<Self> {
        if s.max_exponent().map(|e| e > 0).unwrap_or(false) {
            return Err(Error::InvalidParameter(format!("{s} has positive exponents")));
        }
        let deg = s.terms().map(|(e, _)| -e).max().unwrap_or(0) as usize;
        let mut c = vec![C64::new(0.0, 0.0); deg + 1];
        for (e, a) in s.terms() {
            c[(-e) as usize] = a;
        }
        Ok(Self::polynomial(c))
    }

    pub fn num(&self) -> &[C64] {
        &self.num
    }

    pub fn den(&self) -> &[C64] {
        &self.den
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            num: poly_mul(&self.num, &other.num),
            den: poly_mul(&self.den, &other.den),
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Self::new(poly_mul(&self.num, &other.den), poly_mul(&self.den, &other.num))
    }

    /// Value at `z`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let w = C64::new(1.0, 0.0) / z;
        let d = horner(&self.den, w);
        let n = horner(&self.num, w);
        let scale = self.den.iter().enumerate().map(|(i, c)| c.norm() * w.norm().powi(i as i32)).sum::<f64>();
        if d.norm() <= 1e-14 * scale {
            return Err(Error::Pole {
                location: format!("z = {z}"),
                detail: "denominator of a nonpositive part vanishes".into(),
            });
        }
        Ok(n / d)
    }

    /// Value at `z = ∞`.
    pub fn at_infinity(&self) -> Result<C64> {
        if self.den[0] == C64::new(0.0, 0.0) {
            return Err(Error::Pole {
                location: "z = ∞".into(),
                detail: "denominator has no constant term".into(),
            });
        }
        Ok(self.num[0] / self.den[0])
    }

    /// Expansion at `z = 0` with `rel` coefficients past the valuation.
    pub fn formal_series(&self, rel: i32) -> Result<LaurentSeries> {
        let dn = self.num.len() as i32 - 1;
        let dd = self.den.len() as i32 - 1;
        if self.num.iter().all(|c| *c == C64::new(0.0, 0.0)) {
            return Ok(LaurentSeries::zero(EXACT));
        }
        // num(1/z) = z^{−dn}·Σ num[i] z^{dn−i}
        let rev = |c: &[C64]| -> LaurentSeries {
            let d = c.len() as i32 - 1;
            LaurentSeries::from_terms(
                &c.iter().enumerate().map(|(i, a)| (d - i as i32, *a)).collect::<Vec<_>>(),
                EXACT,
            )
        };
        let n_star = rev(&self.num);
        let d_star = rev(&self.den);
        let shift_n = n_star.min_exponent();
        let inv = d_star.invert_to(rel + d_star.min_exponent().abs() + 1)?;
        let r = n_star.mul(&inv).shift(dd - dn);
        let v = dd - dn + shift_n - d_star.min_exponent();
        Ok(r.truncate(v + rel))
    }
}

impl fmt::Display for RationalZinv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poly = |c: &[C64]| -> String {
            let mut parts = Vec::new();
            for (i, a) in c.iter().enumerate() {
                if *a == C64::new(0.0, 0.0) {
                    continue;
                }
                let coef = if a.im == 0.0 {
                    format!("{:.12}", a.re)
                } else {
                    format!("({:.12}{:+.12}i)", a.re, a.im)
                };
                parts.push(match i {
                    0 => coef,
                    1 => format!("{coef}·z^-1"),
                    _ => format!("{coef}·z^-{i}"),
                });
            }
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        };
        write!(f, "({}) / ({})", poly(&self.num), poly(&self.den))
    }
}

/// One level component of `f_j^{>0}(·,q)`.
#[derive(Clone, Debug)]
pub struct DeformedComponent {
    pub classical: LaurentSeries,
    pub deformed: LaurentSeries,
    pub level: u32,
    pub image: Option<BorelImage>,
    pub radius: f64,
}

/// `f_j^{>0}(z,q)`.
#[derive(Clone, Debug)]
pub struct DeformedPositive {
    q: QParam,
    components: Vec<DeformedComponent>,
    tol: f64,
}

/// Fraction of the deformed-series radius inside which a divergent component
/// is still summed as a series.
const SERIES_FRACTION: f64 = 0.25;

impl DeformedPositive {
    pub fn zero(q: QParam) -> Self {
        Self {
            q,
            components: vec![],
            tol: 1e-15,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.classical.is_zero())
    }

    pub fn components(&self) -> &[DeformedComponent] {
        &self.components
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn eval(&self, z: &LogPoint) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for c in &self.components {
            if c.classical.is_zero() {
                continue;
            }
            match &c.image {
                None => {
                    let limit = 0.9 * c.radius;
                    if z.modulus() >= limit {
                        return Err(Error::DiskRadius {
                            modulus: z.modulus(),
                            limit,
                        });
                    }
                    acc += c.deformed.eval(z.to_complex());
                }
                Some(img) => {
                    if z.modulus() < SERIES_FRACTION * c.radius {
                        acc += c.deformed.eval(z.to_complex());
                    } else {
                        let im = img.clone();
                        let g = IntegrandFn::everywhere(move |t| Ok(im.eval(t.to_complex())));
                        acc += q_laplace_discrete(&g, z, c.level, self.q, self.tol)?.value;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// `Σ` of the deformed series as a formal power series.
    pub fn formal(&self) -> LaurentSeries {
        self.components
            .iter()
            .fold(LaurentSeries::zero(EXACT), |acc, c| acc.add(&c.deformed))
    }
}

/// Deform each level component: coefficients `a_n Γ_p(1+n/ℓ)/Γ(1+n/ℓ)`.
pub fn deform_positive(fpos: &LaurentSeries, components: &[PositiveComponent], q: QParam) -> Result<DeformedPositive> {
    let owned;
    let components = if components.is_empty() {
        owned = vec![PositiveComponent {
            series: fpos.clone(),
            level: 1,
            image: None,
        }];
        &owned[..]
    } else {
        components
    };
    let mut out = Vec::new();
    for c in components {
        if c.series.is_zero() {
            continue;
        }
        let deformed = c.series.q_borel_deform_coeffs(c.level, q)?;
        let radius = deformed.empirical_radius();
        if c.image.is_none() && c.series.empirical_radius() == 0.0 {
            return Err(Error::MissingBorelImage(format!("{}", c.series)));
        }
        out.push(DeformedComponent {
            classical: c.series.clone(),
            deformed,
            level: c.level,
            image: c.image.clone(),
            radius,
        });
    }
    Ok(DeformedPositive {
        q,
        components: out,
        tol: 1e-15,
    })
}

/// The downward recursion for `G_j = 1+(q−1)f_j^{≤0}`:
/// `G_m = 1+(q−1)f̃_m^{≤0}`, `G_j = G_{j+1} / (q[1+(q−1)(f̃_{j+1}^{≤0} − f̃_j^{≤0} − 1)])`.
pub fn deform_nonpositive(op: &FactoredDifferentialOperator, q: QParam) -> Result<Vec<RationalZinv>> {
    let m = op.order();
    let qm1 = C64::new(q.q() - 1.0, 0.0);
    let one_plus = |s: &LaurentSeries| -> Result<RationalZinv> {
        let p = RationalZinv::from_nonpositive(&s.scale(qm1))?;
        let mut c = p.num.clone();
        c[0] += 1.0;
        Ok(RationalZinv::polynomial(c))
    };
    let mut out = vec![RationalZinv::one(); m];
    out[m - 1] = one_plus(&op.nonpositive(m - 1))?;
    for j in (0..m - 1).rev() {
        let diff = op
            .nonpositive(j + 1)
            .sub(&op.nonpositive(j))
            .sub(&LaurentSeries::one());
        let inner = one_plus(&diff)?;
        let c0 = inner.num[0];
        if c0.norm() < 1e-12 {
            let dc = (op.constant(j + 1) - op.constant(j)).re;
            return Err(Error::InvalidParameter(format!(
                "constant term of the recursion denominator vanishes for j = {} at q = {} (critical q = 1 + 1/(1 − Δc) = {})",
                j + 1,
                q.q(),
                1.0 + 1.0 / (1.0 - dc)
            )));
        }
        let p = RationalZinv::polynomial(inner.num.iter().map(|c| c * q.q()).collect());
        out[j] = out[j + 1].div(&p)?;
    }
    Ok(out)
}

/// `1+(q−1)f_j = (1+(q−1)f_j^{>0})·(1+(q−1)f_j^{≤0})`.
#[derive(Clone, Debug)]
pub struct QCoefficientFamily {
    q: QParam,
    nonpositive: RationalZinv,
    positive: DeformedPositive,
}

/// Combine the two parts into a coefficient family.
pub fn combine(positive: DeformedPositive, nonpositive: RationalZinv) -> Result<QCoefficientFamily> {
    Ok(QCoefficientFamily {
        q: positive.q,
        nonpositive,
        positive,
    })
}

impl QCoefficientFamily {
    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn nonpositive(&self) -> &RationalZinv {
        &self.nonpositive
    }

    pub fn positive(&self) -> &DeformedPositive {
        &self.positive
    }

    /// `1 + (q−1) f_j^{>0}(z)`.
    pub fn g_positive(&self, z: &LogPoint) -> Result<C64> {
        if self.positive.is_zero() {
            return Ok(C64::new(1.0, 0.0));
        }
        Ok(C64::new(1.0, 0.0) + self.positive.eval(z)? * (self.q.q() - 1.0))
    }

    /// `1 + (q−1) f_j^{≤0}(z)`.
    pub fn g_nonpositive(&self, z: &LogPoint) -> Result<C64> {
        self.nonpositive.eval(z.to_complex())
    }

    /// `g_j(z) = 1 + (q−1) f_j(z,q)`.
    pub fn g(&self, z: &LogPoint) -> Result<C64> {
        Ok(self.g_positive(z)? * self.g_nonpositive(z)?)
    }

    /// `f_j(z,q)`.
    pub fn f(&self, z: &LogPoint) -> Result<C64> {
        Ok((self.g(z)? - 1.0) / (self.q.q() - 1.0))
    }

    /// Value of `1+(q−1)f_j^{≤0}` at infinity.
    pub fn c_inf(&self) -> Result<C64> {
        self.nonpositive.at_infinity()
    }

    /// Expansion of `g_j` at 0 with `rel` coefficients past the valuation.
    pub fn formal_g(&self, rel: i32) -> Result<LaurentSeries> {
        let np = self.nonpositive.formal_series(rel)?;
        if self.positive.is_zero() {
            return Ok(np);
        }
        let pos = LaurentSeries::one().add(&self.positive.formal().scale(C64::new(self.q.q() - 1.0, 0.0)));
        Ok(np.mul(&pos))
    }
}

/// The downward-recursion deformation of a factored differential operator at `q`.
/// `components[j]` is the level decomposition of `f̃_j^{>0}` (may be empty).
pub fn deform_operator(
    op: &FactoredDifferentialOperator,
    components: &[Vec<PositiveComponent>],
    q: QParam,
) -> Result<FactoredQOperator> {
    let np = deform_nonpositive(op, q)?;
    let mut families = Vec::with_capacity(op.order());
    for (j, g) in np.into_iter().enumerate() {
        let comps = components.get(j).map(|v| &v[..]).unwrap_or(&[]);
        let pos = deform_positive(&op.positive(j), comps, q)?;
        families.push(combine(pos, g)?);
    }
    FactoredQOperator::new(families, q)
}
