//! q-special functions: Θ_q, l_q, Λ_{q,a}, the q-exponentials e_b and Γ_p,
//! together with the classical Γ used to compare against them.
//!
//! Θ_q(z) = Σ_{ℓ∈ℤ} q^{−ℓ(ℓ+1)/2} z^ℓ is summed outward from its largest term
//! with a running log-scale, so ratios such as Λ_{q,a} stay finite even when
//! both theta values overflow a double. Near q = 1 and away from the positive
//! axis that sum cancels catastrophically; there the Poisson-dual series is
//! summed instead.

use crate::domain::{LogPoint, QParam};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-14;
pub const DEFAULT_POLE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_DISK_MARGIN: f64 = 0.9;

/// `ln(1+t)` without cancellation for small `t`.
pub fn ln1p_c(t: C64) -> C64 {
    let re = 0.5 * (2.0 * t.re + t.norm_sqr()).ln_1p();
    let im = t.im.atan2(1.0 + t.re);
    C64::new(re, im)
}

/// Θ_q(z) = e^{log_scale}·sum, together with l_q(z).
#[derive(Clone, Copy, Debug)]
struct ScaledTheta {
    sum: C64,
    log_scale: C64,
    l_q: C64,
}

/// Cancellation factor above which the dual (Poisson-summed) series is used.
const DUAL_SWITCH: f64 = 6.9;

/// Evaluator for Θ_q and the functions built from it.
#[derive(Clone, Copy, Debug)]
pub struct ThetaEvaluator {
    q: QParam,
    tail_tolerance: f64,
    pole_tolerance: f64,
}

impl ThetaEvaluator {
    pub fn new(q: QParam) -> Self {
        Self {
            q,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            pole_tolerance: DEFAULT_POLE_TOLERANCE,
        }
    }

    pub fn with_tolerances(q: QParam, tail_tolerance: f64, pole_tolerance: f64) -> Self {
        Self {
            q,
            tail_tolerance,
            pole_tolerance,
        }
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    fn scaled(&self, z: &LogPoint) -> ScaledTheta {
        let theta = z.argument().rem_euclid(2.0 * PI);
        let theta = if theta > PI { theta - 2.0 * PI } else { theta };
        // the bilateral sum loses about θ²/(2 ln q) nats to cancellation
        if theta * theta / (2.0 * self.q.ln_q()) < DUAL_SWITCH {
            self.direct(z.modulus().ln(), theta)
        } else {
            self.dual(z.modulus().ln(), theta)
        }
    }

    /// Σ q^{−ℓ(ℓ+1)/2} z^ℓ summed outward from its largest term.
    fn direct(&self, lr: f64, theta: f64) -> ScaledTheta {
        let lq = self.q.ln_q();
        let log_term = |l: f64| -l * (l + 1.0) * 0.5 * lq + l * lr;
        let l0 = (lr / lq - 0.5).round();
        let lmax = log_term(l0);
        let mut sum = C64::new(0.0, 0.0);
        let mut d_sum = C64::new(0.0, 0.0);
        let add = |l: f64, sum: &mut C64, d_sum: &mut C64| -> f64 {
            let mag = (log_term(l) - lmax).exp();
            let t = C64::from_polar(mag, l * theta);
            *sum += t;
            *d_sum += t * l;
            mag
        };
        add(l0, &mut sum, &mut d_sum);
        for dir in [1.0, -1.0] {
            let mut l = l0 + dir;
            loop {
                let mag = add(l, &mut sum, &mut d_sum);
                if mag < self.tail_tolerance * sum.norm() || mag < 1e-20 {
                    break;
                }
                l += dir;
            }
        }
        ScaledTheta {
            sum,
            log_scale: C64::new(lmax, 0.0),
            l_q: d_sum / sum,
        }
    }

    /// Poisson-dual form: with τ = ln q and a = log z/τ − 1/2,
    /// Θ_q(z) = √(2π/τ)·e^{τa²/2}·Σ_n e^{−2π²n²/τ − 2πina}.
    fn dual(&self, lr: f64, theta: f64) -> ScaledTheta {
        let tau = self.q.ln_q();
        let a = C64::new(lr / tau - 0.5, theta / tau);
        let mut sum = C64::new(1.0, 0.0);
        let mut d_sum = C64::new(0.0, 0.0);
        let mut n = 1.0;
        loop {
            let mut biggest: f64 = 0.0;
            for sgn in [1.0, -1.0] {
                let m = sgn * n;
                let e = C64::new(-2.0 * PI * PI * m * m / tau, 0.0) - C64::new(0.0, 2.0 * PI * m) * a;
                let t = e.exp();
                sum += t;
                d_sum += t * C64::new(0.0, -2.0 * PI * m);
                biggest = biggest.max(t.norm());
            }
            if biggest < 1e-20 * sum.norm().max(1e-300) || n > 1e4 {
                break;
            }
            n += 1.0;
        }
        ScaledTheta {
            sum,
            log_scale: C64::new(0.5 * (2.0 * PI / tau).ln(), 0.0) + a * a * (tau / 2.0),
            l_q: a + d_sum / (sum * tau),
        }
    }

    /// Θ_q(z).
    pub fn theta(&self, z: &LogPoint) -> Result<C64> {
        let s = self.scaled(z);
        if s.sum == C64::new(0.0, 0.0) {
            return Ok(s.sum);
        }
        if s.log_scale.re + s.sum.norm().ln() > 709.0 {
            return Err(Error::Overflow(format!(
                "theta at |z|={:.3e} with q={} exceeds double range",
                z.modulus(),
                self.q.q()
            )));
        }
        Ok(s.sum * s.log_scale.exp())
    }

    /// Natural logarithm of Θ_q(z) (any branch).
    pub fn theta_ln(&self, z: &LogPoint) -> Result<C64> {
        self.check_pole(z, "theta logarithm")?;
        let s = self.scaled(z);
        Ok(s.sum.ln() + s.log_scale)
    }

    /// Reject points within the pole tolerance of the zero spiral −q^ℤ.
    fn check_pole(&self, w: &LogPoint, context: &str) -> Result<()> {
        let lq = self.q.ln_q();
        let lw = w.modulus().ln();
        let n0 = (lw / lq).round() as i64;
        for n in (n0 - 1)..=(n0 + 1) {
            let rho = (lw - n as f64 * lq).exp();
            let dist = (C64::from_polar(rho, w.argument()) + 1.0).norm();
            if dist < self.pole_tolerance {
                return Err(Error::Pole {
                    location: format!("−q^{n} (q={})", self.q.q()),
                    detail: format!("{context}: relative distance {dist:.3e}"),
                });
            }
        }
        Ok(())
    }

    /// `l_q = δΘ_q/Θ_q`, with `δ = z d/dz` applied termwise.
    pub fn l_q(&self, z: &LogPoint) -> Result<C64> {
        self.check_pole(z, "l_q")?;
        Ok(self.scaled(z).l_q)
    }

    /// `ln Λ_{q,a}(z) = ln Θ_q(z) − ln Θ_q(z/a)`.
    pub fn lambda_ln(&self, z: &LogPoint, a: C64) -> Result<C64> {
        if a == C64::new(1.0, 0.0) {
            return Ok(C64::new(0.0, 0.0));
        }
        if a.norm() == 0.0 || !a.norm().is_finite() {
            return Err(Error::InvalidParameter(format!("Λ_(q,a) needs a ≠ 0, got {a}")));
        }
        let w = LogPoint::new(z.modulus() / a.norm(), z.argument() - a.arg())?;
        self.check_pole(&w, "Λ_(q,a) denominator Θ_q(z/a)")?;
        let sz = self.scaled(z);
        let sw = self.scaled(&w);
        Ok(sz.sum.ln() - sw.sum.ln() + (sz.log_scale - sw.log_scale))
    }

    /// `Λ_{q,a}(z) = Θ_q(z)/Θ_q(z/a)`.
    pub fn lambda(&self, z: &LogPoint, a: C64) -> Result<C64> {
        let l = self.lambda_ln(z, a)?;
        if l.re > 709.0 {
            return Err(Error::Overflow(format!("Λ_(q,a) at |z|={:.3e}", z.modulus())));
        }
        Ok(l.exp())
    }
}

/// Regime of a q-exponential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QExpMode {
    /// `base > 1`: ∏_{n≥0}(1+(b−1)b^{−n−1}z), entire.
    EntireProduct,
    /// `base < 1`: Σ zⁿ/[n]_b!, convergent for |z| < 1/(1−b).
    DiskSeries,
}

/// `e_b(z) = Σ zⁿ/[n]_b!`, evaluated in the regime matching its base.
#[derive(Clone, Copy, Debug)]
pub struct QExponential {
    base: f64,
    mode: QExpMode,
    tolerance: f64,
    margin: f64,
}

impl QExponential {
    pub fn new(base: f64) -> Result<Self> {
        if !(base > 0.0) || base == 1.0 || !base.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "q-exponential base must be positive and ≠ 1, got {base}"
            )));
        }
        let mode = if base > 1.0 {
            QExpMode::EntireProduct
        } else {
            QExpMode::DiskSeries
        };
        Ok(Self {
            base,
            mode,
            tolerance: 1e-17,
            margin: DEFAULT_DISK_MARGIN,
        })
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn mode(&self) -> QExpMode {
        self.mode
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Radius limit of the disk regime (infinite for the entire regime).
    pub fn disk_limit(&self) -> f64 {
        match self.mode {
            QExpMode::EntireProduct => f64::INFINITY,
            QExpMode::DiskSeries => self.margin / (1.0 - self.base),
        }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        match self.mode {
            QExpMode::EntireProduct => match self.product_ln(z)? {
                Some(l) => {
                    if l.re > 709.0 {
                        return Err(Error::Overflow(format!(
                            "e_{}({z}) exceeds double range",
                            self.base
                        )));
                    }
                    Ok(l.exp())
                }
                None => Ok(C64::new(0.0, 0.0)),
            },
            QExpMode::DiskSeries => self.series(z),
        }
    }

    /// Logarithm of e_b(z); zeros are reported as errors.
    pub fn eval_ln(&self, z: C64) -> Result<C64> {
        match self.mode {
            QExpMode::EntireProduct => self.product_ln(z)?.ok_or_else(|| Error::Pole {
                location: format!("{z}"),
                detail: format!("zero of e_{}", self.base),
            }),
            QExpMode::DiskSeries => Ok(self.series(z)?.ln()),
        }
    }

    /// Σ_n ln(1+t_n) with t_n = (b−1)b^{−n−1}z; `None` at an exact zero.
    fn product_ln(&self, z: C64) -> Result<Option<C64>> {
        let b = self.base;
        if z == C64::new(0.0, 0.0) {
            return Ok(Some(z));
        }
        let mut acc = C64::new(0.0, 0.0);
        let r = 1.0 / b;
        let geo1 = 1.0 - r;
        let geo2 = 1.0 - r * r;
        let geo3 = 1.0 - r * r * r;
        for n in 0..10_000_000i32 {
            let t = z * ((b - 1.0) * b.powi(-(n + 1)));
            let tn = t.norm();
            if tn < 0.1 && tn.powi(3) / (3.0 * geo3) < self.tolerance {
                // the remaining t_k are exactly geometric: sum the log series in closed form
                acc += t / geo1 - t * t / (2.0 * geo2) + t * t * t / (3.0 * geo3);
                return Ok(Some(acc));
            }
            let f = C64::new(1.0, 0.0) + t;
            if f.norm() < 1e-15 {
                return Ok(None);
            }
            acc += ln1p_c(t);
        }
        Err(Error::NonConvergence {
            what: format!("e_{} product", b),
            terms: 10_000_000,
            tail: f64::NAN,
        })
    }

    fn series(&self, z: C64) -> Result<C64> {
        let b = self.base;
        let limit = self.disk_limit();
        if z.norm() >= limit {
            return Err(Error::DiskRadius {
                modulus: z.norm(),
                limit,
            });
        }
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        let mut small = 0;
        let mut bn = 1.0;
        for _ in 1..1_000_000 {
            bn *= b;
            term *= z * ((1.0 - b) / (1.0 - bn));
            sum += term;
            if term.norm() <= self.tolerance * sum.norm() {
                small += 1;
                if small >= 3 {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: format!("e_{} series", b),
            terms: 1_000_000,
            tail: term.norm(),
        })
    }
}

/// `e_b(z)` with the regime chosen from the base.
pub fn qexp(z: C64, base: f64) -> Result<C64> {
    QExponential::new(base)?.eval(z)
}

/// `ln e_b(z)`.
pub fn qexp_ln(z: C64, base: f64) -> Result<C64> {
    QExponential::new(base)?.eval_ln(z)
}

/// `1/e_b(z) = ∏_{n≥0}(1 − (1−b)bⁿz)` for `0 < b < 1`, valid on all of ℂ.
///
/// This is the continuation of the disk series to the whole disk and beyond;
/// it is used where the series margin would be too tight.
pub fn qexp_disk_reciprocal_ln(z: C64, base: f64) -> Result<C64> {
    if !(base > 0.0 && base < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "reciprocal disk product needs 0 < b < 1, got {base}"
        )));
    }
    // 1 − (1−b)bⁿz = 1 + (1/b − 1)(1/b)^{−n−1}(−z): an entire-regime product in base 1/b.
    QExponential::new(1.0 / base)?
        .product_ln(-z)?
        .ok_or_else(|| Error::Pole {
            location: format!("{z}"),
            detail: format!("pole of e_{base}"),
        })
}

/// `[n]_b! = ∏_{k=1}^n (1−b^k)/(1−b)`.
pub fn q_factorial(n: u32, b: f64) -> f64 {
    (1..=n).map(|k| (1.0 - b.powi(k as i32)) / (1.0 - b)).product()
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn nonpositive_integer(z: C64) -> bool {
    z.im.abs() < 1e-14 && z.re <= 0.5 && (z.re - z.re.round()).abs() < 1e-14
}

/// `ln Γ(z)` by the Lanczos approximation, reflecting into Re z ≥ 1/2.
pub fn ln_gamma(z: C64) -> Result<C64> {
    if nonpositive_integer(z) {
        return Err(Error::Pole {
            location: format!("{}", z.re.round()),
            detail: "pole of Γ".into(),
        });
    }
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        let s = (z * PI).sin();
        return Ok(C64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(C64::new(1.0, 0.0) - z)?);
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(C64::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + x.ln())
}

/// Classical Γ(z).
pub fn gamma(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re > 0.0 && z.re == z.re.round() && z.re <= 20.0 {
        let n = z.re as u64;
        return Ok(C64::new((1..n).map(|k| k as f64).product(), 0.0));
    }
    Ok(ln_gamma(z)?.exp())
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("ln Γ needs x > 0, got {x}")));
    }
    Ok(ln_gamma(C64::new(x, 0.0))?.re)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0,1), got {p}")));
    }
    Ok(())
}

/// `ln Γ_p(x)` from `(1−p)^{1−x} ∏_{n≥0}(1−p^{n+1})/(1−p^{n+x})`.
pub fn ln_gamma_p(x: C64, p: f64) -> Result<C64> {
    check_p(p)?;
    let lp = p.ln();
    let mut acc = (C64::new(1.0, 0.0) - x) * (1.0 - p).ln();
    for n in 0..50_000_000u64 {
        let a = p.powf(n as f64 + 1.0);
        let b = ((x + n as f64) * lp).exp();
        let one_minus_b = C64::new(1.0, 0.0) - b;
        if one_minus_b.norm() < 1e-14 {
            return Err(Error::Pole {
                location: format!("x = {x}"),
                detail: format!("pole of Γ_p (factor n={n}), p={p}"),
            });
        }
        let diff = b - a;
        if b.norm() < 1e-8 && a < 1e-8 {
            // the remaining a_k, b_k are geometric with ratio p
            let tail = diff / (1.0 - p) + (b * b - a * a) / (2.0 * (1.0 - p * p));
            if tail.norm() < 1e-16 * acc.norm().max(1.0) || diff.norm() < 1e-300 {
                return Ok(acc + tail);
            }
        }
        acc += C64::new((-a).ln_1p(), 0.0) - ln1p_c(-b);
    }
    Err(Error::NonConvergence {
        what: format!("Γ_p product at x={x}, p={p}"),
        terms: 50_000_000,
        tail: f64::NAN,
    })
}

/// `Γ_p(x)`.
pub fn gamma_p(x: C64, p: f64) -> Result<C64> {
    Ok(ln_gamma_p(x, p)?.exp())
}

/// `ln Γ_p(x)` for real `x > 0`.
pub fn ln_gamma_p_real(x: f64, p: f64) -> Result<f64> {
    Ok(ln_gamma_p(C64::new(x, 0.0), p)?.re)
}
