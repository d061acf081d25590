//! Spiral-limit constants
//! `c_{j,k}(z,q) = lim_N t_0(ĝ_{j,k})·(q^{−N}z)^{v_0(ĝ_{j,k})}·u_k(q^{−N}z)/u_j(q^{−N}z)`.

use super::offdiag::QFundamental;
use crate::domain::LogPoint;
use crate::error::{Error, Result};
use crate::operators::FormalGauge;
use num_complex::Complex64 as C64;
use serde::Serialize;

const CONSECUTIVE: usize = 8;
/// Log-modulus below which a steadily shrinking estimate is reported as 0.
pub const UNDERFLOW_NATS: f64 = -700.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectionConstant {
    pub value: C64,
    pub n_used: usize,
    pub converged: bool,
    /// `ln|c_N|` of the last estimate, useful when the value underflows.
    pub last_ln_modulus: f64,
}

/// Successive estimates `c_N`, `N = 0, 1, …`, stopped by a Cauchy test.
pub fn estimate_connection(
    fund: &QFundamental,
    gauge: &FormalGauge,
    j: usize,
    k: usize,
    z: &LogPoint,
    n_max: usize,
    tol: f64,
) -> Result<ConnectionConstant> {
    let m = fund.order();
    if j >= k || k >= m {
        return Err(Error::InvalidParameter(format!(
            "connection constants need 1 ≤ j < k ≤ {m}, got ({}, {})",
            j + 1,
            k + 1
        )));
    }
    if gauge.order() != m {
        return Err(Error::InvalidParameter("gauge and operator orders differ".into()));
    }
    let g = gauge.entry(j, k);
    let v = match g.valuation().finite() {
        // t_0(0) := 0
        None => {
            return Ok(ConnectionConstant {
                value: C64::new(0.0, 0.0),
                n_used: 0,
                converged: true,
                last_ln_modulus: f64::NEG_INFINITY,
            })
        }
        Some(v) => v,
    };
    let ln_t0 = g.leading().ln();
    let q = fund.diagonal().q();
    let mut table = fund.spiral(z, 0)?;
    let mut prev: Option<C64> = None;
    let mut prev_ln = f64::INFINITY;
    let mut stable = 0;
    let mut shrinking = 0;
    for n in 0..=n_max {
        if n > 0 {
            fund.push(&mut table)?;
        }
        let zn = table.point(n, q)?;
        let l = ln_t0 + v as f64 * zn.ln() + table.ln_u[k][n] - table.ln_u[j][n];
        if l.re < UNDERFLOW_NATS && l.re < prev_ln {
            shrinking += 1;
            if shrinking >= CONSECUTIVE {
                return Ok(ConnectionConstant {
                    value: C64::new(0.0, 0.0),
                    n_used: n,
                    converged: true,
                    last_ln_modulus: l.re,
                });
            }
        } else {
            shrinking = 0;
        }
        prev_ln = l.re;
        let c = if l.re < -745.0 { C64::new(0.0, 0.0) } else { l.exp() };
        if let Some(p) = prev {
            if (c - p).norm() <= tol * c.norm() {
                stable += 1;
                if stable >= CONSECUTIVE {
                    return Ok(ConnectionConstant {
                        value: c,
                        n_used: n,
                        converged: true,
                        last_ln_modulus: l.re,
                    });
                }
            } else {
                stable = 0;
            }
        }
        prev = Some(c);
    }
    Err(Error::NonConvergence {
        what: format!(
            "connection constant c_({},{}) at z = {} (last ln|c_N| = {prev_ln:.3})",
            j + 1,
            k + 1,
            z.to_complex()
        ),
        terms: n_max,
        tail: f64::NAN,
    })
}

/// All `c_{j,k}` for `j < k` at `z`, as an upper-triangular matrix.
pub fn connection_matrix(
    fund: &QFundamental,
    gauge: &FormalGauge,
    z: &LogPoint,
    n_max: usize,
    tol: f64,
) -> Result<Vec<Vec<C64>>> {
    let m = fund.order();
    let mut c = vec![vec![C64::new(0.0, 0.0); m]; m];
    for k in 1..m {
        for j in 0..k {
            c[j][k] = estimate_connection(fund, gauge, j, k, z, n_max, tol)?.value;
        }
    }
    Ok(c)
}
