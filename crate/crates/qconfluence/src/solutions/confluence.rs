//! Residual checks, the confluence error `E(q)` and grid sampling.

use super::diagonal::spiral_point;
use super::offdiag::{DiffFundamental, QFundamental, Scaled};
use crate::domain::LogPoint;
use crate::error::{Error, Result};
use crate::operators::Flavor;
use crate::quadrature::{jackson_partial, IntegrandFn};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Polar grid `{r_i e^{iθ_l}}` with endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radial: usize,
    pub angular: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub arg_min: f64,
    pub arg_max: f64,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial == 0 || self.angular == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid radii must satisfy 0 < r_min ≤ r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if !(self.arg_max >= self.arg_min) || !self.arg_min.is_finite() || !self.arg_max.is_finite() {
            return Err(Error::InvalidParameter("grid arguments must satisfy arg_min ≤ arg_max".into()));
        }
        Ok(())
    }

    /// Points ordered radius-major.
    pub fn points(&self) -> Result<Vec<LogPoint>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.radial * self.angular);
        for r in linspace(self.r_min, self.r_max, self.radial) {
            for a in linspace(self.arg_min, self.arg_max, self.angular) {
                out.push(LogPoint::new(r, a)?);
            }
        }
        Ok(out)
    }
}

fn locate(z: &LogPoint) -> String {
    format!("z = {:.6e}·e^(i·{:.6})", z.modulus(), z.argument())
}

/// Relative size of `a − b − c` against the largest of the three.
fn relative_defect(a: Scaled, b: Scaled, c: Scaled) -> f64 {
    let minus = C64::new(-1.0, 0.0);
    let d = a.add(b.scale(minus)).add(c.scale(minus));
    let scale = a.ln_norm().max(b.ln_norm()).max(c.ln_norm());
    if scale == f64::NEG_INFINITY {
        return 0.0;
    }
    (d.ln_norm() - scale).exp()
}

/// `max_{j≤k} |σ_q u_{j,k} − g_j u_{j,k} − (q−1) u_{j+1,k}|` relative to the
/// largest of the three terms; `U(qz)` is evaluated independently of `U(z)`.
pub fn q_residual(fund: &QFundamental, z: &LogPoint) -> Result<f64> {
    let q = fund.diagonal().q();
    let m = fund.order();
    let u = fund.scaled_matrix(z)?;
    let uq = fund.scaled_matrix(&spiral_point(z, -1, q)?)?;
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let g = fund.diagonal().operator().family(j).g(z)?;
        for k in j..m {
            let a = uq[j][k].unwrap();
            let b = u[j][k].unwrap().scale(g);
            let c = if k > j {
                u[j + 1][k].unwrap().scale(C64::new(q.q() - 1.0, 0.0))
            } else {
                Scaled::ZERO
            };
            worst = worst.max(relative_defect(a, b, c));
        }
    }
    Ok(worst)
}

/// Step of the radial central differences in `ln |z|`.
pub const DIFFERENCE_STEP: f64 = 1e-5;

/// `max_{j≤k} |δũ_{j,k} − a_j ũ_{j,k} − ũ_{j+1,k}|` relative to the largest
/// term, with `δ` from Richardson-extrapolated central differences in `ln|z|`.
pub fn diff_residual(fund: &DiffFundamental, z: &LogPoint) -> Result<f64> {
    let m = fund.order();
    let at = |s: f64| -> Result<Vec<Vec<C64>>> { fund.matrix(&z.scale(s.exp())?) };
    let central = |h: f64| -> Result<Vec<Vec<C64>>> {
        let p = at(h)?;
        let n = at(-h)?;
        Ok((0..m)
            .map(|j| (0..m).map(|k| (p[j][k] - n[j][k]) / (2.0 * h)).collect())
            .collect())
    };
    let h = DIFFERENCE_STEP;
    let d1 = central(h)?;
    let d2 = central(h / 2.0)?;
    let u = fund.matrix(z)?;
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let a = fund.diagonal().coefficient(j, z)?;
        for k in j..m {
            let du = (4.0 * d2[j][k] - d1[j][k]) / 3.0;
            let b = a * u[j][k];
            let c = if k > j { u[j + 1][k] } else { C64::new(0.0, 0.0) };
            let scale = du.norm().max(b.norm()).max(c.norm());
            if scale > 0.0 {
                worst = worst.max((du - b - c).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// `u_{j,k}(z) − [u_{j,k}(q^{−N}z)·u_j(z)/u_j(q^{−N}z) + u_j(z)·∫ φ d_q t/t]`,
/// with the partial Jackson sum over `N` nodes and `φ(t) = u_{j+1,k}(t)/u_j(qt)`,
/// relative to the largest term. Every value is evaluated independently.
pub fn finite_n_identity_residual(fund: &QFundamental, j: usize, k: usize, z: &LogPoint, n: usize) -> Result<f64> {
    if j >= k || k >= fund.order() {
        return Err(Error::InvalidParameter(format!("identity needs j < k, got ({}, {})", j + 1, k + 1)));
    }
    let q = fund.diagonal().q();
    let zn = spiral_point(z, n as i64, q)?;
    let ujk = fund.entry(j, k, z)?;
    let ujk_n = fund.entry(j, k, &zn)?;
    let uj = fund.diagonal().u(j, z)?;
    let uj_n = fund.diagonal().u(j, &zn)?;
    let phi = IntegrandFn::everywhere(|t: &LogPoint| {
        let num = fund.entry(j + 1, k, t)?;
        let den = fund.diagonal().u(j, &spiral_point(t, -1, q)?)?;
        Ok(num / den / t.to_complex())
    });
    let jac = jackson_partial(&phi, z, n, q)?;
    let first = ujk_n * uj / uj_n;
    let second = uj * jac;
    let scale = ujk.norm().max(first.norm()).max(second.norm());
    Ok((ujk - first - second).norm() / scale)
}

/// Samples of the boundedness hypothesis on one spiral. For `j < m` let
/// `ρ_j = u_{j+1}/(z·σ_q u_j)`; `bound[j]` is the largest `|ρ_j(q^{−N}z)|` over
/// `1 ≤ N ≤ n_max`, and `monotone` records whether `|σ_q ρ_j| ≥ |ρ_j|` at
/// every sampled point with `|q^{−N}z| ≤ MONOTONE_RADIUS`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessSample {
    pub bound: Vec<f64>,
    pub monotone: bool,
}

/// Radius below which the monotonicity of `|ρ_j|` is asserted.
pub const MONOTONE_RADIUS: f64 = 0.25;

pub fn boundedness_sample(fund: &QFundamental, z: &LogPoint, n_max: usize) -> Result<BoundednessSample> {
    let m = fund.order();
    let q = fund.diagonal().q();
    let table = fund.spiral(z, n_max + 1)?;
    let ln_rho = |j: usize, n: usize| -> Result<f64> {
        let zn = table.point(n, q)?;
        Ok((table.ln_u[j + 1][n] - zn.ln() - table.ln_u[j][n - 1]).re)
    };
    let mut bound = vec![0.0f64; m.saturating_sub(1)];
    let mut monotone = true;
    for j in 0..m.saturating_sub(1) {
        for n in 1..=n_max {
            let here = ln_rho(j, n)?;
            let outer = ln_rho(j, n + 1)?;
            let small = table.point(n + 1, q)?.modulus() <= MONOTONE_RADIUS;
            // σ_q ρ at z_{n+1} is ρ at z_n
            if small && here < outer - 1e-12 * outer.abs().max(1.0) {
                monotone = false;
            }
            bound[j] = bound[j].max(here.min(709.0).exp());
        }
    }
    Ok(BoundednessSample { bound, monotone })
}

/// Largest entrywise deviation of one entry over the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntryError {
    /// 1-based.
    pub j: usize,
    pub k: usize,
    pub max_error: f64,
    pub at: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfluenceRow {
    pub q: f64,
    pub error: f64,
    pub entries: Vec<EntryError>,
}

/// `Ũ^d` on every grid point, in grid order.
pub fn sample_diff(fund: &DiffFundamental, grid: &[LogPoint]) -> Result<Vec<Vec<Vec<C64>>>> {
    grid.par_iter()
        .map(|z| fund.matrix(z).map_err(|e| e.at(locate(z))))
        .collect()
}

/// `U(·,q)` on every grid point, in grid order.
pub fn sample_q(fund: &QFundamental, grid: &[LogPoint]) -> Result<Vec<Vec<Vec<C64>>>> {
    grid.par_iter()
        .map(|z| fund.matrix(z).map_err(|e| e.at(locate(z))))
        .collect()
}

/// `E(q) = max_{grid, j≤k} |u_{j,k}(z,q) − ũ_{j,k}(z)|` with its per-entry
/// breakdown. The reduction runs in grid order.
pub fn confluence_error(
    q: f64,
    q_values: &[Vec<Vec<C64>>],
    diff_values: &[Vec<Vec<C64>>],
    grid: &[LogPoint],
) -> Result<ConfluenceRow> {
    if q_values.len() != grid.len() || diff_values.len() != grid.len() {
        return Err(Error::InvalidParameter("sample and grid sizes differ".into()));
    }
    let m = diff_values.first().map(|u| u.len()).unwrap_or(0);
    let mut entries = Vec::new();
    for j in 0..m {
        for k in j..m {
            let mut e = EntryError {
                j: j + 1,
                k: k + 1,
                max_error: 0.0,
                at: (f64::NAN, f64::NAN),
            };
            for (i, z) in grid.iter().enumerate() {
                let d = (q_values[i][j][k] - diff_values[i][j][k]).norm();
                if !(d <= e.max_error) {
                    e.max_error = d;
                    e.at = (z.modulus(), z.argument());
                }
            }
            entries.push(e);
        }
    }
    let error = entries.iter().map(|e| e.max_error).fold(0.0, f64::max);
    Ok(ConfluenceRow { q, error, entries })
}

/// One CSV row of a sampled fundamental matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRow {
    pub z: LogPoint,
    /// 1-based.
    pub j: usize,
    pub k: usize,
    pub u: C64,
    pub flavor: Flavor,
    pub q: Option<f64>,
}

/// Rows for the upper triangle of each sampled matrix.
pub fn sample_rows(grid: &[LogPoint], values: &[Vec<Vec<C64>>], flavor: Flavor, q: Option<f64>) -> Vec<SampleRow> {
    let mut rows = Vec::new();
    for (z, u) in grid.iter().zip(values) {
        for j in 0..u.len() {
            for k in j..u.len() {
                rows.push(SampleRow {
                    z: *z,
                    j: j + 1,
                    k: k + 1,
                    u: u[j][k],
                    flavor,
                    q,
                });
            }
        }
    }
    rows
}

pub const CSV_HEADER: &str = "re_z,im_z,arg_z,j,k,re_u,im_u,flavor,q";

/// Write rows as CSV with a header; numbers use a fixed 17-digit format so
/// output is byte-identical across runs.
pub fn write_csv<W: Write>(mut w: W, rows: &[SampleRow]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let z = r.z.to_complex();
        let q = r.q.map(|q| format!("{q:.17e}")).unwrap_or_default();
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{},{}",
            z.re,
            z.im,
            r.z.argument(),
            r.j,
            r.k,
            r.u.re,
            r.u.im,
            r.flavor.label(),
            q
        )?;
    }
    Ok(())
}
