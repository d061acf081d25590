//! Borel–Laplace summation of positive parts and the search for a direction
//! in which every diagonal ratio decays.

use crate::domain::{angular_distance, normalize_angle, LogPoint};
use crate::error::{Error, Result};
use crate::operators::FactoredDifferentialOperator;
use crate::quadrature::{laplace, Growth, IntegrandFn};
use crate::series::LaurentSeries;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

const TWO_PI: f64 = 2.0 * PI;

/// Tolerance for "d hits a singular direction".
pub const SINGULAR_TOLERANCE: f64 = 1e-9;

type BorelFn = dyn Fn(C64) -> C64 + Send + Sync;

/// A supplied analytic continuation of a Borel transform, with its growth
/// certificate and the z-plane directions in which it is singular.
#[derive(Clone)]
pub struct BorelImage {
    name: String,
    level: u32,
    g: Arc<BorelFn>,
    growth: Growth,
    singular: Vec<f64>,
}

impl fmt::Debug for BorelImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BorelImage")
            .field("name", &self.name)
            .field("level", &self.level)
            .field("growth", &self.growth)
            .field("singular", &self.singular)
            .finish()
    }
}

impl BorelImage {
    pub fn new(
        name: impl Into<String>,
        level: u32,
        growth: Growth,
        singular: Vec<f64>,
        g: impl Fn(C64) -> C64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("Borel level must be positive".into()));
        }
        let mut singular: Vec<f64> = singular.into_iter().map(normalize_angle).collect();
        singular.sort_by(f64::total_cmp);
        Ok(Self {
            name: name.into(),
            level,
            g: Arc::new(g),
            growth,
            singular,
        })
    }

    pub fn zero(level: u32) -> Self {
        Self::new("zero", level, Growth { j: 1.0, l: 0.0 }, vec![], |_| C64::new(0.0, 0.0))
            .expect("positive level")
    }

    /// `log(1+ζ)` at level 1, the Borel image of Σ(−1)ⁿn!z^{n+1}.
    pub fn log1p() -> Self {
        Self::new("log1p", 1, Growth { j: 4.0, l: 0.1 }, vec![PI], |z: C64| {
            (C64::new(1.0, 0.0) + z).ln()
        })
        .expect("positive level")
    }

    /// `num(ζ)/den(ζ)` (coefficient lists in increasing degree); the
    /// directions of the poles become singular directions.
    pub fn rational(num: Vec<C64>, den: Vec<C64>, level: u32) -> Result<Self> {
        if den.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidParameter("rational Borel image with zero denominator".into()));
        }
        let poles = polynomial_roots(&den)?;
        if poles.iter().any(|p| p.norm() < 1e-12) {
            return Err(Error::InvalidParameter("rational Borel image has a pole at ζ = 0".into()));
        }
        let lf = level as f64;
        let mut singular = Vec::new();
        for p in &poles {
            for n in 0..level {
                singular.push(p.arg() / lf + TWO_PI * n as f64 / lf);
            }
        }
        let (n2, d2) = (num.clone(), den.clone());
        let eval = move |z: C64| horner(&n2, z) / horner(&d2, z);
        // growth: sampled sup of |g| away from the poles, L = 0
        let mut j: f64 = 0.0;
        for a in 0..64 {
            let ang = TWO_PI * a as f64 / 64.0;
            for r in 0..200 {
                let z = C64::from_polar(r as f64 * 0.25, ang);
                if poles.iter().all(|p| (z - p).norm() > 1e-2) {
                    j = j.max(eval(z).norm());
                }
            }
        }
        Self::new("rational", level, Growth { j: j.max(1.0), l: 0.0 }, singular, eval)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// Singular directions in the z-plane, normalized to [0, 2π).
    pub fn singular_directions(&self) -> &[f64] {
        &self.singular
    }

    pub fn eval(&self, zeta: C64) -> C64 {
        (self.g)(zeta)
    }

    /// Check `|g(ζ)| ≤ J exp(L|ζ|^ℓ)` on sample points of the ray `d`.
    pub fn spot_check_growth(&self, d: f64, samples: usize) -> bool {
        (1..=samples).all(|i| {
            let r = 0.5 * i as f64;
            let v = self.eval(C64::from_polar(r, d)).norm();
            v <= self.growth.j * (self.growth.l * r.powi(self.level as i32)).exp() * (1.0 + 1e-12)
        })
    }

    fn hits(&self, d: f64) -> Option<f64> {
        self.singular
            .iter()
            .copied()
            .find(|s| angular_distance(*s, d) < SINGULAR_TOLERANCE)
    }
}

fn horner(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * z + a)
}

/// Roots of a polynomial (increasing-degree coefficients) by Durand–Kerner.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while matches!(c.last(), Some(x) if x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Ok(vec![]);
    }
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let bound = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(bound * 0.9, 0.4 + TWO_PI * k as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let num = horner(&monic, roots[i]);
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            let step = num / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            return Ok(roots);
        }
    }
    Err(Error::NonConvergence {
        what: "polynomial root finder".into(),
        terms: 2000,
        tail: f64::NAN,
    })
}

/// One summand of a level decomposition of a positive part.
#[derive(Clone, Debug)]
pub struct PositiveComponent {
    pub series: LaurentSeries,
    pub level: u32,
    pub image: Option<BorelImage>,
}

/// `S̃^d(f̃^{>0})`: convergent components summed directly, divergent ones by
/// Laplace transforms of their Borel images.
#[derive(Clone, Debug)]
pub struct SummedPositivePart {
    direction: f64,
    convergent: LaurentSeries,
    radius: f64,
    divergent: Vec<BorelImage>,
    tol: f64,
}

impl SummedPositivePart {
    pub fn zero() -> Self {
        Self {
            direction: 0.0,
            convergent: LaurentSeries::zero(crate::series::EXACT),
            radius: f64::INFINITY,
            divergent: vec![],
            tol: 1e-14,
        }
    }

    pub fn direction(&self) -> f64 {
        self.direction
    }

    pub fn is_zero(&self) -> bool {
        self.convergent.is_zero() && self.divergent.is_empty()
    }

    /// Largest summation level (0 when everything converges).
    pub fn max_level(&self) -> u32 {
        self.divergent.iter().map(|b| b.level).max().unwrap_or(0)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn check_radius(&self, z: &LogPoint) -> Result<()> {
        let limit = 0.9 * self.radius;
        if z.modulus() >= limit {
            return Err(Error::DiskRadius {
                modulus: z.modulus(),
                limit,
            });
        }
        Ok(())
    }

    /// The summed function at `z`.
    pub fn eval(&self, z: &LogPoint) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        if !self.convergent.is_zero() {
            self.check_radius(z)?;
            acc += self.convergent.eval(z.to_complex());
        }
        for img in &self.divergent {
            let im = img.clone();
            let f = IntegrandFn::everywhere(move |t| Ok(im.eval(t.to_complex())));
            acc += laplace(&f, z, img.level, self.direction, Some(img.growth), self.tol)?;
        }
        Ok(acc)
    }

    /// `∫_0^z S̃^d(f̃^{>0})(t) dt/t`. The divergent levels use
    /// `(z^k/k)·L_k^d[g(ζ)/ζ^k](z)`, which follows from exchanging the two
    /// integrals.
    pub fn integrated(&self, z: &LogPoint) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        if !self.convergent.is_zero() {
            self.check_radius(z)?;
            let zc = z.to_complex();
            for (e, c) in self.convergent.terms() {
                acc += c * zc.powi(e) / e as f64;
            }
        }
        for img in &self.divergent {
            let k = img.level;
            let im = img.clone();
            let f = IntegrandFn::everywhere(move |t| {
                let zeta = t.to_complex();
                Ok(im.eval(zeta) / zeta.powi(k as i32))
            });
            let l = laplace(&f, z, k, self.direction, Some(img.growth), self.tol)?;
            acc += l * z.pow_int(k as i32).to_complex() / k as f64;
        }
        Ok(acc)
    }
}

/// Levelwise Borel–Laplace sum of `fpos` in direction `d`.
pub fn sum_in_direction(
    fpos: &LaurentSeries,
    components: &[PositiveComponent],
    d: f64,
) -> Result<SummedPositivePart> {
    if !fpos.is_zero() && fpos.min_exponent() < 1 {
        return Err(Error::InvalidParameter(format!(
            "positive part has a term z^{}",
            fpos.min_exponent()
        )));
    }
    let default;
    let components = if components.is_empty() {
        default = [PositiveComponent {
            series: fpos.clone(),
            level: 1,
            image: None,
        }];
        &default[..]
    } else {
        let total = components
            .iter()
            .fold(LaurentSeries::zero(crate::series::EXACT), |acc, c| acc.add(&c.series));
        let diff = total.sub(fpos);
        let scale = fpos.terms().map(|t| t.1.norm()).fold(1.0, f64::max);
        if diff.terms().any(|(_, c)| c.norm() > 1e-12 * scale) {
            return Err(Error::InvalidParameter(
                "level decomposition does not sum to the positive part".into(),
            ));
        }
        components
    };
    let mut convergent = LaurentSeries::zero(crate::series::EXACT);
    let mut divergent = Vec::new();
    for c in components {
        if c.series.is_zero() {
            continue;
        }
        match &c.image {
            Some(img) => {
                if let Some(s) = img.hits(d) {
                    return Err(Error::SingularDirection {
                        direction: d,
                        singular: s,
                    });
                }
                if img.level != c.level {
                    return Err(Error::InvalidParameter(format!(
                        "component declared at level {} but Borel image '{}' has level {}",
                        c.level, img.name, img.level
                    )));
                }
                divergent.push(img.clone());
            }
            None => {
                if c.series.empirical_radius() == 0.0 {
                    return Err(Error::MissingBorelImage(format!("{}", c.series)));
                }
                convergent = convergent.add(&c.series);
            }
        }
    }
    let radius = convergent.empirical_radius();
    Ok(SummedPositivePart {
        direction: d,
        convergent,
        radius,
        divergent,
        tol: 1e-14,
    })
}

/// The open arcs of one diagonal index, all inside [0, 2π).
#[derive(Clone, Debug, PartialEq)]
pub struct ArcSet {
    pub index: usize,
    pub mu: i32,
    pub leading: C64,
    pub arcs: Vec<(f64, f64)>,
}

/// A direction `d` and margin `ε` in which every diagonal ratio decays.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleSector {
    pub direction: f64,
    pub half_width: f64,
    /// Surviving open intervals; one that wraps through 0 is written with a
    /// negative start.
    pub intervals: Vec<(f64, f64)>,
    pub certificate: Vec<ArcSet>,
}

/// `{θ ∈ [0,2π) : Re(c e^{iμθ}) < 0}` for `μ < 0`, as sorted open arcs.
pub fn arcs_for(leading: C64, mu: i32) -> Vec<(f64, f64)> {
    let phi = leading.arg();
    let m = mu.unsigned_abs() as f64;
    let hw = PI / (2.0 * m);
    let mut out = Vec::new();
    for n in 0..mu.unsigned_abs() {
        // cos(φ + μθ) < 0 around φ + μθ = π + 2πn
        let c = normalize_angle((PI - phi + TWO_PI * n as f64) / mu as f64);
        let (a, b) = (c - hw, c + hw);
        if a < 0.0 {
            out.push((0.0, b));
            out.push((a + TWO_PI, TWO_PI));
        } else if b > TWO_PI {
            out.push((a, TWO_PI));
            out.push((0.0, b - TWO_PI));
        } else {
            out.push((a, b));
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    merge(out)
}

fn merge(v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn intersect(x: &[(f64, f64)], y: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Intersect the per-index arcs, cut out the singular directions and pick
/// the midpoint of the largest surviving interval.
pub fn admissible_from_leading(leading: &[(C64, i32)], singular: &[f64]) -> Result<AdmissibleSector> {
    let mut certificate = Vec::new();
    let mut acc = vec![(0.0, TWO_PI)];
    for (idx, &(c, mu)) in leading.iter().enumerate() {
        if mu >= 0 || c.norm() == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "index {} needs a negative valuation and nonzero leading term, got ({c}, {mu})",
                idx + 1
            )));
        }
        let arcs = arcs_for(c, mu);
        acc = intersect(&acc, &arcs);
        certificate.push(ArcSet {
            index: idx + 1,
            mu,
            leading: c,
            arcs,
        });
    }
    let mut sing: Vec<f64> = singular.iter().map(|s| normalize_angle(*s)).collect();
    sing.sort_by(f64::total_cmp);
    for s in &sing {
        let mut next = Vec::new();
        for &(a, b) in &acc {
            if *s > a && *s < b {
                next.push((a, *s));
                next.push((*s, b));
            } else {
                next.push((a, b));
            }
        }
        acc = next;
    }
    // join an interval ending at 2π with one starting at 0
    let touches_zero = acc.first().map(|i| i.0 == 0.0).unwrap_or(false) && !sing.contains(&0.0);
    let touches_two_pi = acc.last().map(|i| i.1 == TWO_PI).unwrap_or(false);
    if acc.len() > 1 && touches_zero && touches_two_pi {
        let first = acc.remove(0);
        let last = acc.pop().unwrap();
        acc.push((last.0 - TWO_PI, first.1));
        acc.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
    if acc.is_empty() {
        return Err(Error::EmptyIntersection(
            "the decay arcs of the diagonal ratios do not intersect".into(),
        ));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for &(a, b) in &acc {
        let len = b - a;
        let mid = normalize_angle(0.5 * (a + b));
        best = match best {
            None => Some((len, mid, a)),
            Some((bl, bm, ba)) => {
                if len > bl + 1e-12 || ((len - bl).abs() <= 1e-12 && mid < bm) {
                    Some((len, mid, a))
                } else {
                    Some((bl, bm, ba))
                }
            }
        };
    }
    let (len, d, _) = best.unwrap();
    let dist = sing
        .iter()
        .map(|s| angular_distance(*s, d))
        .fold(f64::INFINITY, f64::min);
    Ok(AdmissibleSector {
        direction: d,
        half_width: (len / 4.0).min(dist),
        intervals: acc,
        certificate,
    })
}

/// Admissible sector of a factored differential operator: for each `j < m`
/// the arcs where `Re(f̃_{j,μ_j} z^{μ_j}) < 0`, so that `ũ_{j+1}/ũ_j → 0`.
pub fn admissible_direction(op: &FactoredDifferentialOperator, singular: &[f64]) -> Result<AdmissibleSector> {
    let m = op.order();
    let leading: Vec<(C64, i32)> = (0..m.saturating_sub(1))
        .map(|j| {
            let c = op.coeff(j);
            (c.leading(), c.valuation().finite().unwrap_or(0))
        })
        .collect();
    admissible_from_leading(&leading, singular)
}
