//! Off-diagonal entries by variation of constants.
//!
//! q-side: along the spiral `z_i = q^{−i}z`, write `u_{j,k}(z_i) = u_j(z_i)F_{j,k}(i)`.
//! Then `F_{k,k} = 1` and
//! `F_{j,k}(n) = c_{j,k} + (q−1) Σ_{i>n} r_j(i) F_{j+1,k}(i)` with
//! `r_j(i) = u_{j+1}(z_i)/u_j(z_{i−1})`, so one backward sweep per column gives
//! every nested Jackson integral at once.
//!
//! Differential side: along `t = z e^{−s}` the same structure holds with
//! `J_{j,k}(s) = ∫_s^∞ ũ_{j+1}/ũ_j · J_{j+1,k}` and segment suffix sums.

use super::diagonal::{checked_exp, spiral_point, DiffDiagonal, QDiagonal};
use crate::domain::LogPoint;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Whether the spiral-limit constants enter the off-diagonal entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionMode {
    #[default]
    Pure,
    WithConstants,
}

impl ConnectionMode {
    pub fn label(&self) -> &'static str {
        match self {
            ConnectionMode::Pure => "pure",
            ConnectionMode::WithConstants => "with-constants",
        }
    }
}

impl std::str::FromStr for ConnectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" => Ok(Self::Pure),
            "with-constants" => Ok(Self::WithConstants),
            _ => Err(Error::InvalidParameter(format!(
                "unknown connection mode '{s}' (expected pure or with-constants)"
            ))),
        }
    }
}

/// `mantissa·e^{exponent}`; keeps nested sums finite when the diagonal
/// ratios span hundreds of orders of magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaled {
    pub mantissa: C64,
    pub exponent: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: C64::new(0.0, 0.0),
        exponent: f64::NEG_INFINITY,
    };

    pub fn one() -> Self {
        Self::from_c64(C64::new(1.0, 0.0))
    }

    pub fn from_c64(c: C64) -> Self {
        if c.norm() == 0.0 {
            return Self::ZERO;
        }
        Self {
            mantissa: c,
            exponent: 0.0,
        }
        .normalized()
    }

    /// `exp(l)`.
    pub fn from_ln(l: C64) -> Self {
        if l.re == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            mantissa: C64::from_polar(1.0, l.im),
            exponent: l.re,
        }
    }

    fn normalized(self) -> Self {
        let n = self.mantissa.norm();
        if n == 0.0 || !n.is_finite() {
            return if n == 0.0 { Self::ZERO } else { self };
        }
        Self {
            mantissa: self.mantissa / n,
            exponent: self.exponent + n.ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    /// `ln|·|`, `−∞` for zero.
    pub fn ln_norm(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.exponent + self.mantissa.norm().ln()
        }
    }

    pub fn mul(self, o: Scaled) -> Scaled {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        Scaled {
            mantissa: self.mantissa * o.mantissa,
            exponent: self.exponent + o.exponent,
        }
        .normalized()
    }

    pub fn scale(self, c: C64) -> Scaled {
        self.mul(Scaled::from_c64(c))
    }

    pub fn add(self, o: Scaled) -> Scaled {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.exponent >= o.exponent { (self, o) } else { (o, self) };
        let m = big.mantissa + small.mantissa * (small.exponent - big.exponent).exp();
        Scaled {
            mantissa: m,
            exponent: big.exponent,
        }
        .normalized()
    }

    /// The plain value; overflow is an error, underflow gives 0.
    pub fn to_c64(self) -> Result<C64> {
        if self.is_zero() {
            return Ok(C64::new(0.0, 0.0));
        }
        if self.ln_norm() > 709.0 {
            return Err(Error::Overflow(format!("value with log-modulus {:.1}", self.ln_norm())));
        }
        Ok(self.mantissa * self.exponent.exp())
    }
}

/// Cap on ray segments; refined segments near a pole of the polar part
/// count individually.
pub const MAX_RAY_SEGMENTS: usize = 2000;
pub const MAX_SPIRAL_DEPTH: usize = 1_000_000;
/// Growth (in nats) of a Jackson integrand past which the integral is
/// declared divergent.
pub const DIVERGENCE_NATS: f64 = 700.0;
const CONSECUTIVE: usize = 8;

/// `ln u_j(z_i)` for `i = 0..=depth` and all `j`.
#[derive(Clone, Debug)]
pub struct SpiralTable {
    pub z: LogPoint,
    /// `ln_u[j][i]`.
    pub ln_u: Vec<Vec<C64>>,
}

impl SpiralTable {
    pub fn depth(&self) -> usize {
        self.ln_u[0].len() - 1
    }

    pub fn point(&self, i: usize, q: crate::domain::QParam) -> Result<LogPoint> {
        spiral_point(&self.z, i as i64, q)
    }
}

/// q-side fundamental matrix `U(z,q)`.
#[derive(Clone, Debug)]
pub struct QFundamental {
    diag: QDiagonal,
    mode: ConnectionMode,
    /// `constants[j][k]` for `j < k`; only used in with-constants mode.
    constants: Option<Vec<Vec<C64>>>,
    tol: f64,
    max_depth: usize,
}

impl QFundamental {
    pub fn new(diag: QDiagonal) -> Self {
        Self {
            diag,
            mode: ConnectionMode::Pure,
            constants: None,
            tol: 1e-16,
            max_depth: MAX_SPIRAL_DEPTH,
        }
    }

    /// Switch to with-constants mode with the given `c_{j,k}` (upper triangle
    /// used; must be constant along each spiral, which spiral limits are).
    pub fn with_constants(mut self, constants: Vec<Vec<C64>>) -> Self {
        self.mode = ConnectionMode::WithConstants;
        self.constants = Some(constants);
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_depth(mut self, n: usize) -> Self {
        self.max_depth = n;
        self
    }

    pub fn mode(&self) -> ConnectionMode {
        self.mode
    }

    pub fn diagonal(&self) -> &QDiagonal {
        &self.diag
    }

    pub fn order(&self) -> usize {
        self.diag.order()
    }

    fn constant(&self, j: usize, k: usize) -> C64 {
        match (&self.constants, self.mode) {
            (Some(c), ConnectionMode::WithConstants) => c[j][k],
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Extend `table` by one spiral point.
    pub fn push(&self, table: &mut SpiralTable) -> Result<()> {
        let q = self.diag.q();
        let i = table.depth() + 1;
        let t = spiral_point(&table.z, i as i64, q)?;
        for j in 0..self.order() {
            // u_j(z_{i−1}) = g_j(z_i) u_j(z_i)
            let l = table.ln_u[j][i - 1] - self.diag.ln_g(j, &t)?;
            table.ln_u[j].push(l);
        }
        Ok(())
    }

    /// Spiral table with exactly `depth` steps.
    pub fn spiral(&self, z: &LogPoint, depth: usize) -> Result<SpiralTable> {
        let mut table = SpiralTable {
            z: *z,
            ln_u: (0..self.order())
                .map(|j| Ok(vec![self.diag.ln_u(j, z)?]))
                .collect::<Result<Vec<_>>>()?,
        };
        for _ in 0..depth {
            self.push(&mut table)?;
        }
        Ok(table)
    }

    /// Spiral deep enough that every ratio `r_j` has decayed below the
    /// tolerance relative to its largest value.
    pub fn converged_spiral(&self, z: &LogPoint) -> Result<SpiralTable> {
        let m = self.order();
        let mut table = self.spiral(z, 0)?;
        if m == 1 {
            return Ok(table);
        }
        let ln_tol = self.tol.ln();
        let mut running = vec![f64::NEG_INFINITY; m - 1];
        let mut first = vec![f64::NAN; m - 1];
        let mut small = 0;
        for i in 1..=self.max_depth {
            self.push(&mut table)?;
            let mut all_small = true;
            for j in 0..m - 1 {
                let lr = (table.ln_u[j + 1][i] - table.ln_u[j][i - 1]).re;
                if i == 1 {
                    first[j] = lr;
                }
                if lr - first[j] > DIVERGENCE_NATS {
                    return Err(Error::NonConvergence {
                        what: format!(
                            "Jackson integrand u_{}(t)/u_{}(qt) grows along the spiral from z = {} (|t| = {:.3e}, growth {:.0} nats); the integral diverges in this direction",
                            j + 2,
                            j + 1,
                            z.to_complex(),
                            table.point(i, self.diag.q())?.modulus(),
                            lr - first[j]
                        ),
                        terms: i,
                        tail: f64::INFINITY,
                    });
                }
                running[j] = running[j].max(lr);
                if lr >= ln_tol + running[j] {
                    all_small = false;
                }
            }
            if all_small {
                small += 1;
                if small >= CONSECUTIVE {
                    return Ok(table);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: format!("spiral depth for the Jackson integrals at z = {}", z.to_complex()),
            terms: self.max_depth,
            tail: f64::NAN,
        })
    }

    /// `F_{j,k}(n)` for all `j ≤ k` and `n ∈ [0, depth]` (`f[j][n]`).
    pub fn column_factors(&self, table: &SpiralTable, k: usize) -> Vec<Vec<Scaled>> {
        let depth = table.depth();
        let qm1 = C64::new(self.diag.q().q() - 1.0, 0.0);
        let mut f = vec![Vec::new(); k + 1];
        f[k] = vec![Scaled::one(); depth + 1];
        for j in (0..k).rev() {
            let c = Scaled::from_c64(self.constant(j, k));
            let mut col = vec![Scaled::ZERO; depth + 1];
            let mut suffix = Scaled::ZERO;
            col[depth] = c;
            for n in (0..depth).rev() {
                let i = n + 1;
                let r = Scaled::from_ln(table.ln_u[j + 1][i] - table.ln_u[j][i - 1]);
                suffix = suffix.add(r.mul(f[j + 1][i]));
                col[n] = c.add(suffix.scale(qm1));
            }
            f[j] = col;
        }
        f
    }

    /// `u_{j,k}(z)` for `j ≤ k` as scaled values; `None` below the diagonal.
    pub fn scaled_matrix(&self, z: &LogPoint) -> Result<Vec<Vec<Option<Scaled>>>> {
        let m = self.order();
        let table = self.converged_spiral(z)?;
        let mut out = vec![vec![None; m]; m];
        for k in 0..m {
            let f = self.column_factors(&table, k);
            for j in 0..=k {
                out[j][k] = Some(Scaled::from_ln(table.ln_u[j][0]).mul(f[j][0]));
            }
        }
        Ok(out)
    }

    /// `U(z,q)`; entries below the diagonal are 0.
    pub fn matrix(&self, z: &LogPoint) -> Result<Vec<Vec<C64>>> {
        to_plain(self.scaled_matrix(z)?)
    }

    pub fn entry(&self, j: usize, k: usize, z: &LogPoint) -> Result<C64> {
        if j > k {
            return Ok(C64::new(0.0, 0.0));
        }
        if j == k {
            return self.diag.u(j, z);
        }
        let table = self.converged_spiral(z)?;
        let f = self.column_factors(&table, k);
        Scaled::from_ln(table.ln_u[j][0]).mul(f[j][0]).to_c64()
    }
}

fn to_plain(m: Vec<Vec<Option<Scaled>>>) -> Result<Vec<Vec<C64>>> {
    m.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|e| e.map(|s| s.to_c64()).unwrap_or(Ok(C64::new(0.0, 0.0))))
                .collect()
        })
        .collect()
}

/// Differential-side fundamental matrix `Ũ^d(z)`.
#[derive(Clone, Debug)]
pub struct DiffFundamental {
    diag: DiffDiagonal,
    rule: GaussLegendre,
    step: f64,
    max_segments: usize,
    consecutive: usize,
    tol: f64,
}

impl DiffFundamental {
    pub fn new(diag: DiffDiagonal) -> Self {
        Self {
            diag,
            rule: GaussLegendre::new(16),
            step: -(0.5f64.ln()),
            max_segments: MAX_RAY_SEGMENTS,
            consecutive: 4,
            tol: 1e-16,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Segments `[ρ^{n+1}z, ρ^n z]` with an `order`-point Gauss–Legendre rule.
    pub fn with_subdivision(mut self, ratio: f64, order: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) || order == 0 {
            return Err(Error::InvalidParameter(format!(
                "ray subdivision needs 0 < ratio < 1 and a positive order, got ({ratio}, {order})"
            )));
        }
        self.step = -ratio.ln();
        self.rule = GaussLegendre::new(order);
        Ok(self)
    }

    pub fn diagonal(&self) -> &DiffDiagonal {
        &self.diag
    }

    pub fn order(&self) -> usize {
        self.diag.order()
    }

    fn node(&self, z: &LogPoint, s: f64) -> Result<LogPoint> {
        z.scale((-s).exp())
    }

    /// `ũ_{j+1}/ũ_j` at `z e^{−s}`.
    fn ratio(&self, j: usize, z: &LogPoint, s: f64) -> Result<C64> {
        let t = self.node(z, s)?;
        let l = self.diag.ln_u(j + 1, &t)? - self.diag.ln_u(j, &t)?;
        Ok(if l.re < -745.0 { C64::new(0.0, 0.0) } else { checked_exp(l, "ratio ũ_{j+1}/ũ_j")? })
    }

    /// Largest `|f̃_{j+1}^{≤0} − f̃_j^{≤0}|` at `t`: the log-derivative scale of
    /// the ratios near 0, where the polar parts dominate.
    fn rate(&self, t: &LogPoint, active: &[bool]) -> f64 {
        let op = self.diag.operator();
        (0..active.len())
            .filter(|&j| active[j])
            .map(|j| (op.nonpositive(j + 1).eval(t.to_complex()) - op.nonpositive(j).eval(t.to_complex())).norm())
            .fold(0.0, f64::max)
    }

    /// Segment boundaries in `s`: at most `−ln ρ` long, and short enough that
    /// the ratios change by about one nat per segment. Stops once every
    /// ratio has decayed.
    fn segments(&self, z: &LogPoint, k: usize) -> Result<Vec<f64>> {
        let ln_tol = self.tol.ln();
        let mut running = vec![f64::NEG_INFINITY; k];
        let mut first = vec![f64::NAN; k];
        let mut small = 0;
        let mut bounds = vec![0.0];
        // a ratio that has decayed no longer needs resolving
        let mut active = vec![true; k];
        for n in 0..self.max_segments {
            let a = bounds[n];
            let h = self.step.min(1.0 / self.rate(&self.node(z, a)?, &active).max(1e-300));
            let b = a + h;
            bounds.push(b);
            let mut all_small = true;
            for j in 0..k {
                // largest |ratio| over the segment, sampled at its ends and middle
                let mut lr = f64::NEG_INFINITY;
                for s in [a, 0.5 * (a + b), b] {
                    let t = self.node(z, s)?;
                    let l = (self.diag.ln_u(j + 1, &t)? - self.diag.ln_u(j, &t)?).re;
                    lr = lr.max(l);
                }
                if n == 0 {
                    first[j] = lr;
                }
                if lr - first[j] > DIVERGENCE_NATS {
                    return Err(Error::NonConvergence {
                        what: format!(
                            "ray integrand ũ_{}/ũ_{} grows toward 0 from z = {} (growth {:.0} nats); the integral diverges in this direction",
                            j + 2,
                            j + 1,
                            z.to_complex(),
                            lr - first[j]
                        ),
                        terms: n + 1,
                        tail: f64::INFINITY,
                    });
                }
                running[j] = running[j].max(lr);
                active[j] = lr >= ln_tol + running[j];
                if active[j] {
                    all_small = false;
                }
            }
            if all_small {
                small += 1;
                if small >= self.consecutive {
                    return Ok(bounds);
                }
            } else {
                small = 0;
            }
        }
        Err(Error::NonConvergence {
            what: format!("ray integral at z = {}", z.to_complex()),
            terms: self.max_segments,
            tail: f64::NAN,
        })
    }

    /// `∫_s^b ratio_j·J_{j+1,k}` where `J_{j+1,k}(t) = ∫_t^b … + suffix[j+1]`.
    fn partial(&self, j: usize, k: usize, z: &LogPoint, s: f64, b: f64, suffix: &[C64]) -> Result<C64> {
        if b - s <= 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        self.rule.integrate(s, b, |t| {
            let inner = if j + 1 == k {
                C64::new(1.0, 0.0)
            } else {
                self.partial(j + 1, k, z, t, b, suffix)? + suffix[j + 1]
            };
            Ok(self.ratio(j, z, t)? * inner)
        })
    }

    /// `J_{j,k}(0)` for all `j < k`.
    fn column_integrals(&self, z: &LogPoint, k: usize) -> Result<Vec<C64>> {
        let bounds = self.segments(z, k)?;
        // suffix[j] = ∫_{a_{n+1}}^∞ ratio_j·J_{j+1,k}, updated as n decreases
        let mut suffix = vec![C64::new(0.0, 0.0); k + 1];
        for n in (0..bounds.len() - 1).rev() {
            let (a, b) = (bounds[n], bounds[n + 1]);
            let whole: Vec<C64> = (0..k)
                .map(|j| self.partial(j, k, z, a, b, &suffix))
                .collect::<Result<_>>()?;
            for j in 0..k {
                suffix[j] += whole[j];
            }
        }
        Ok(suffix[..k].to_vec())
    }

    /// `Ũ^d(z)`; entries below the diagonal are 0.
    pub fn matrix(&self, z: &LogPoint) -> Result<Vec<Vec<C64>>> {
        let m = self.order();
        let mut out = vec![vec![C64::new(0.0, 0.0); m]; m];
        let ln_u: Vec<C64> = (0..m).map(|j| self.diag.ln_u(j, z)).collect::<Result<_>>()?;
        for k in 0..m {
            out[k][k] = checked_exp(ln_u[k], "ũ_k")?;
            if k == 0 {
                continue;
            }
            let integrals = self.column_integrals(z, k)?;
            for j in 0..k {
                out[j][k] = Scaled::from_ln(ln_u[j]).scale(integrals[j]).to_c64()?;
            }
        }
        Ok(out)
    }

    pub fn entry(&self, j: usize, k: usize, z: &LogPoint) -> Result<C64> {
        if j > k {
            return Ok(C64::new(0.0, 0.0));
        }
        if j == k {
            return self.diag.u(j, z);
        }
        let integrals = self.column_integrals(z, k)?;
        Scaled::from_ln(self.diag.ln_u(j, z)?).scale(integrals[j]).to_c64()
    }
}
