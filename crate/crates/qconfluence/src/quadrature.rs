//! Jackson q-integrals, ray integrals from 0, Laplace transforms and the
//! discrete q-Laplace transform.
//!
//! Integrands are functions on the Riemann surface of the logarithm. The
//! Jackson integral with upper limit `z` is
//! `∫_0^z f(t) d_q t = (q−1) Σ_{ℓ≤−1} f(q^ℓ z) q^ℓ z`.

use crate::domain::{LogPoint, QParam, SectorDomain};
use crate::error::{Error, Result};
use crate::qfunctions::qexp_disk_reciprocal_ln;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

type Eval<'a> = dyn Fn(&LogPoint) -> Result<C64> + Send + Sync + 'a;

/// An evaluable map on a declared sector.
pub struct IntegrandFn<'a> {
    f: Box<Eval<'a>>,
    domain: SectorDomain,
}

impl<'a> IntegrandFn<'a> {
    pub fn new(domain: SectorDomain, f: impl Fn(&LogPoint) -> Result<C64> + Send + Sync + 'a) -> Self {
        Self {
            f: Box::new(f),
            domain,
        }
    }

    /// An integrand defined on the whole surface.
    pub fn everywhere(f: impl Fn(&LogPoint) -> Result<C64> + Send + Sync + 'a) -> Self {
        Self::new(SectorDomain::everywhere(), f)
    }

    pub fn domain(&self) -> SectorDomain {
        self.domain
    }

    pub fn eval(&self, z: &LogPoint) -> Result<C64> {
        self.domain.check(z, "integrand")?;
        (self.f)(z)
    }
}

/// Outcome of a truncated sum or quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureReport {
    pub value: C64,
    pub terms_used: usize,
    pub tail_estimate: f64,
    pub converged: bool,
}

/// Gauss–Legendre rule on [−1, 1], nodes from Newton iteration on P_n.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p1 = x;
                    p0 = 1.0;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// ∫_a^b f(u) du.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> Result<C64>) -> Result<C64> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x)? * *w;
        }
        Ok(acc * half)
    }
}

fn node_error(z: &LogPoint, context: String, e: Error) -> Error {
    Error::Domain {
        modulus: z.modulus(),
        argument: z.argument(),
        context: format!(" ({context}: {e})"),
    }
}

/// `(q−1) Σ_{ℓ=−N}^{−1} f(q^ℓ z) q^ℓ z`.
pub fn jackson_partial(f: &IntegrandFn, z: &LogPoint, n: usize, q: QParam) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for i in 1..=n {
        let t = z.dilate(-(i as i32), q);
        let v = f.eval(&t).map_err(|e| node_error(&t, format!("Jackson node ℓ=−{i}"), e))?;
        acc += v * t.to_complex();
    }
    Ok(acc * (q.q() - 1.0))
}

pub const JACKSON_MAX_TERMS: usize = 1_000_000;

/// The improper Jackson integral `∫_0^z f(t) d_q t`, summed downward until
/// 8 consecutive terms fall below `tol` relative to the running sum.
pub fn jackson_improper(f: &IntegrandFn, z: &LogPoint, q: QParam, tol: f64) -> Result<QuadratureReport> {
    let mut acc = C64::new(0.0, 0.0);
    let mut small = 0;
    let mut last = f64::NAN;
    let lq = q.ln_q();
    for i in 1..=JACKSON_MAX_TERMS {
        // q^{−i}z from the exponent directly keeps deep nodes accurate
        let t = LogPoint::new((z.modulus().ln() - i as f64 * lq).exp(), z.argument())
            .map_err(|e| node_error(z, format!("Jackson node ℓ=−{i}"), e))?;
        let v = f.eval(&t).map_err(|e| node_error(&t, format!("Jackson node ℓ=−{i}"), e))?;
        let term = v * t.to_complex() * (q.q() - 1.0);
        if !term.re.is_finite() || !term.im.is_finite() {
            return Err(Error::NonConvergence {
                what: "Jackson integral (non-finite term)".into(),
                terms: i,
                tail: f64::INFINITY,
            });
        }
        acc += term;
        last = term.norm();
        if last <= tol * acc.norm() {
            small += 1;
            if small >= 8 {
                return Ok(QuadratureReport {
                    value: acc,
                    terms_used: i,
                    tail_estimate: last,
                    converged: true,
                });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "Jackson integral".into(),
        terms: JACKSON_MAX_TERMS,
        tail: last,
    })
}

/// Geometric ray subdivision with a fixed Gauss–Legendre rule per segment.
#[derive(Clone, Debug)]
pub struct RayQuadrature {
    pub ratio: f64,
    pub max_segments: usize,
    pub consecutive: usize,
    rule: GaussLegendre,
}

impl Default for RayQuadrature {
    fn default() -> Self {
        Self::new(0.5, 16)
    }
}

impl RayQuadrature {
    pub fn new(ratio: f64, order: usize) -> Self {
        Self {
            ratio,
            max_segments: 200,
            consecutive: 4,
            rule: GaussLegendre::new(order),
        }
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Segment length in `u = ln(z/t)`.
    pub fn step(&self) -> f64 {
        -self.ratio.ln()
    }

    /// `∫_0^z f(t) dt/t` along the ray through `z`, written as
    /// `∫_0^∞ f(z e^{−u}) du`.
    pub fn integrate(&self, f: &IntegrandFn, z: &LogPoint, tol: f64) -> Result<QuadratureReport> {
        let h = self.step();
        let mut acc = C64::new(0.0, 0.0);
        let mut small = 0;
        let mut last = f64::NAN;
        for k in 0..self.max_segments {
            let seg = self.rule.integrate(k as f64 * h, (k + 1) as f64 * h, |u| {
                let t = z.scale((-u).exp())?;
                f.eval(&t)
            })?;
            if !seg.re.is_finite() || !seg.im.is_finite() {
                return Err(Error::NonConvergence {
                    what: "ray integral (non-finite segment)".into(),
                    terms: k + 1,
                    tail: f64::INFINITY,
                });
            }
            acc += seg;
            last = seg.norm();
            if last <= tol * acc.norm() {
                small += 1;
                if small >= self.consecutive {
                    return Ok(QuadratureReport {
                        value: acc,
                        terms_used: k + 1,
                        tail_estimate: last,
                        converged: true,
                    });
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: "ray integral".into(),
            terms: self.max_segments,
            tail: last,
        })
    }
}

/// `∫_0^z f(t) dt/t` with the default subdivision (ratio 0.5, 16 nodes).
pub fn ray_integral(f: &IntegrandFn, z: &LogPoint, tol: f64) -> Result<QuadratureReport> {
    RayQuadrature::default().integrate(f, z, tol)
}

/// Exponential growth certificate `|f(ζ)| ≤ J exp(L|ζ|^k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub j: f64,
    pub l: f64,
}

/// Laplace transform of order `k` in direction `d`:
/// `L_k^d f(z) = ∫_0^{∞e^{ikd}} z^{−k} f(ζ^{1/k}) e^{−ζ/z^k} dζ`.
pub fn laplace(
    f: &IntegrandFn,
    z: &LogPoint,
    k: u32,
    d: f64,
    growth: Option<Growth>,
    tol: f64,
) -> Result<C64> {
    if k == 0 {
        return Err(Error::InvalidParameter("Laplace order must be positive".into()));
    }
    let kf = k as f64;
    let half = PI / (2.0 * kf);
    if (z.argument() - d).abs() >= half {
        return Err(Error::Domain {
            modulus: z.modulus(),
            argument: z.argument(),
            context: format!(" (Laplace sector ({:.6}, {:.6}))", d - half, d + half),
        });
    }
    let w = z.ramify(kf)?;
    let omega = C64::from_polar(1.0, kf * d);
    let rate = (omega / w.to_complex()).re;
    let l = growth.map(|g| g.l).unwrap_or(0.0);
    if rate <= l {
        return Err(Error::NonConvergence {
            what: format!(
                "Laplace integral at |z|={:.3e}: decay rate {rate:.3e} does not beat growth L={l:.3e}",
                z.modulus()
            ),
            terms: 0,
            tail: f64::INFINITY,
        });
    }
    let lambda = 1.0 / (rate - l);
    let winv = C64::new(1.0, 0.0) / w.to_complex();
    let integrand = |s: f64| -> Result<C64> {
        if s <= 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let zeta = LogPoint::new(s.powf(1.0 / kf), d)?;
        Ok(f.eval(&zeta)? * (-(omega * s) * winv).exp())
    };
    let rule = GaussLegendre::new(16);
    // s = λx^k on the first segment smooths ζ^{1/k−1}-type endpoint behaviour
    let mut acc = rule.integrate(0.0, 1.0, |x| {
        let s = lambda * x.powi(k as i32);
        Ok(integrand(s)? * (lambda * kf * x.powi(k as i32 - 1)))
    })?;
    let mut small = 0;
    for n in 1..4000 {
        let seg = rule.integrate(n as f64 * lambda, (n + 1) as f64 * lambda, integrand)?;
        if !seg.re.is_finite() || !seg.im.is_finite() {
            break;
        }
        acc += seg;
        if seg.norm() <= tol * acc.norm() {
            small += 1;
            if small >= 4 {
                return Ok(acc * omega * winv);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "Laplace integral".into(),
        terms: 4000,
        tail: f64::NAN,
    })
}

/// Discrete q-Laplace transform of level ℓ:
/// `f(z) = Σ_{k≥0} p^k (p^{k+1};p)_∞ g(z·(p^k/(1−p))^{1/ℓ})`,
/// the p-Jackson integral of `g(ζ^{1/ℓ})` against `1/e_p(pζ/z^ℓ) d_pζ/z^ℓ`
/// over `[0, z^ℓ/(1−p)]`. It inverts `a_n zⁿ ↦ a_n ζⁿ/Γ_p(1+n/ℓ)` exactly.
pub fn q_laplace_discrete(
    g: &IntegrandFn,
    z: &LogPoint,
    level: u32,
    q: QParam,
    tol: f64,
) -> Result<QuadratureReport> {
    if level == 0 {
        return Err(Error::InvalidParameter("q-Laplace level must be positive".into()));
    }
    let p = q.p();
    let lp = p.ln();
    let inv_l = 1.0 / level as f64;
    // (p;p)_∞ = 1/e_p(p/(1−p))
    let mut ln_w = qexp_disk_reciprocal_ln(C64::new(p / (1.0 - p), 0.0), p)?.re;
    let ln_base = z.modulus().ln() - inv_l * (1.0 - p).ln();
    let mut acc = C64::new(0.0, 0.0);
    let mut small = 0;
    let mut last = f64::NAN;
    // the weights grow until p^{k+1} < 1−p; near q = 1 the first ones underflow
    let peak = ((1.0 - p).ln() / lp).ceil() as usize;
    for k in 0..JACKSON_MAX_TERMS {
        let node = LogPoint::new((ln_base + inv_l * k as f64 * lp).exp(), z.argument())?;
        let v = g
            .eval(&node)
            .map_err(|e| node_error(&node, format!("q-Laplace node k={k}"), e))?;
        let term = v * ln_w.exp();
        acc += term;
        last = term.norm();
        if k >= peak && last <= tol * acc.norm() {
            small += 1;
            if small >= 8 {
                return Ok(QuadratureReport {
                    value: acc,
                    terms_used: k + 1,
                    tail_estimate: last,
                    converged: true,
                });
            }
        } else {
            small = 0;
        }
        ln_w += lp - (-(p.powi(k as i32 + 1))).ln_1p();
    }
    Err(Error::NonConvergence {
        what: "discrete q-Laplace transform".into(),
        terms: JACKSON_MAX_TERMS,
        tail: last,
    })
}
