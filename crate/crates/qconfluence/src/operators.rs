//! Factored differential and q-difference operators, their companion
//! systems, the non-resonance test and the formal gauge transformation.
//!
//! Indices are 0-based in code; reports and files use 1-based indices.

use crate::deformation::QCoefficientFamily;
use crate::domain::{LogPoint, QParam};
use crate::error::{Error, Result};
use crate::series::{LaurentSeries, Valuation};
use crate::summation::SummedPositivePart;
use num_complex::Complex64 as C64;

/// `Δ̃ = (δ − f̃_m)⋯(δ − f̃_1)`, stored as `[f̃_1, …, f̃_m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredDifferentialOperator {
    coeffs: Vec<LaurentSeries>,
}

impl FactoredDifferentialOperator {
    /// Validates `v_0(f̃_1) < … < v_0(f̃_m)` (zero has valuation +∞) and
    /// `v_0(f̃_{m−1}) < 0`.
    pub fn new(coeffs: Vec<LaurentSeries>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidOperator("operator needs at least one coefficient".into()));
        }
        for j in 1..coeffs.len() {
            if coeffs[j - 1].valuation() >= coeffs[j].valuation() {
                return Err(Error::InvalidOperator(format!(
                    "valuations must increase strictly: v(f̃_{}) = {} ≥ v(f̃_{}) = {}",
                    j,
                    coeffs[j - 1].valuation(),
                    j + 1,
                    coeffs[j].valuation()
                )));
            }
        }
        let m = coeffs.len();
        if m >= 2 && coeffs[m - 2].valuation() >= Valuation::Finite(0) {
            return Err(Error::InvalidOperator(format!(
                "v(f̃_{}) must be negative, got {}",
                m - 1,
                coeffs[m - 2].valuation()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, j: usize) -> &LaurentSeries {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[LaurentSeries] {
        &self.coeffs
    }

    pub fn valuations(&self) -> Vec<Valuation> {
        self.coeffs.iter().map(|c| c.valuation()).collect()
    }

    /// `f̃_j^{≤0}` as an exact Laurent polynomial.
    pub fn nonpositive(&self, j: usize) -> LaurentSeries {
        self.coeffs[j].split_parts().0
    }

    pub fn positive(&self, j: usize) -> LaurentSeries {
        self.coeffs[j].split_parts().1
    }

    /// The constant term `f̃_{j,0}`.
    pub fn constant(&self, j: usize) -> C64 {
        self.coeffs[j].coeff(0)
    }
}

/// `Δ_q = (δ_q − f_m)⋯(δ_q − f_1)` at a fixed q.
#[derive(Clone, Debug)]
pub struct FactoredQOperator {
    families: Vec<QCoefficientFamily>,
    q: QParam,
    q_max: f64,
}

pub const DEFAULT_Q_MAX: f64 = 1.5;

impl FactoredQOperator {
    pub fn new(families: Vec<QCoefficientFamily>, q: QParam) -> Result<Self> {
        if families.is_empty() {
            return Err(Error::InvalidOperator("q-operator needs at least one coefficient".into()));
        }
        if families.iter().any(|f| f.q() != q) {
            return Err(Error::InvalidOperator("coefficient families built at different q".into()));
        }
        Ok(Self {
            families,
            q,
            q_max: DEFAULT_Q_MAX,
        })
    }

    pub fn with_q_max(mut self, q_max: f64) -> Self {
        self.q_max = q_max;
        self
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn order(&self) -> usize {
        self.families.len()
    }

    pub fn family(&self, j: usize) -> &QCoefficientFamily {
        &self.families[j]
    }

    pub fn families(&self) -> &[QCoefficientFamily] {
        &self.families
    }

    /// Formal expansions of `g_j = 1+(q−1)f_j` at 0, each with `rel` terms
    /// past its valuation.
    pub fn formal_g(&self, rel: i32) -> Result<Vec<LaurentSeries>> {
        self.families.iter().map(|f| f.formal_g(rel)).collect()
    }

    /// Newton-polygon slopes `−v_0(g_j)`.
    pub fn slopes(&self) -> Result<Vec<i32>> {
        self.formal_g(4)?
            .iter()
            .map(|g| {
                g.valuation()
                    .finite()
                    .map(|v| -v)
                    .ok_or_else(|| Error::InvalidOperator("g_j vanishes identically".into()))
            })
            .collect()
    }

    pub fn companion(&self) -> CompanionMatrix<'_> {
        let diag = self
            .families
            .iter()
            .map(|f| Box::new(move |z: &LogPoint| f.g(z)) as Box<Entry<'_>>)
            .collect();
        CompanionMatrix::new(Flavor::QDifference, diag, C64::new(self.q.q() - 1.0, 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Flavor {
    Differential,
    QDifference,
}

impl Flavor {
    pub fn label(&self) -> &'static str {
        match self {
            Flavor::Differential => "differential",
            Flavor::QDifference => "q",
        }
    }
}

type Entry<'a> = dyn Fn(&LogPoint) -> Result<C64> + Send + Sync + 'a;

/// Upper bidiagonal companion matrix with evaluable diagonal entries.
pub struct CompanionMatrix<'a> {
    flavor: Flavor,
    diag: Vec<Box<Entry<'a>>>,
    superdiag: C64,
}

impl<'a> CompanionMatrix<'a> {
    pub fn new(flavor: Flavor, diag: Vec<Box<Entry<'a>>>, superdiag: C64) -> Self {
        Self {
            flavor,
            diag,
            superdiag,
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn superdiag(&self) -> C64 {
        self.superdiag
    }

    pub fn diag_entry(&self, j: usize, z: &LogPoint) -> Result<C64> {
        (self.diag[j])(z)
    }

    pub fn eval(&self, z: &LogPoint) -> Result<Vec<Vec<C64>>> {
        let m = self.order();
        let mut out = vec![vec![C64::new(0.0, 0.0); m]; m];
        for j in 0..m {
            out[j][j] = self.diag_entry(j, z)?;
            if j + 1 < m {
                out[j][j + 1] = self.superdiag;
            }
        }
        Ok(out)
    }
}

/// `C̃` with diagonal `f̃_j^{≤0} + S̃^d(f̃_j^{>0})` and superdiagonal 1.
pub fn differential_companion<'a>(
    op: &'a FactoredDifferentialOperator,
    summed: &'a [SummedPositivePart],
) -> CompanionMatrix<'a> {
    let diag = (0..op.order())
        .map(|j| {
            let np = op.nonpositive(j);
            let s = &summed[j];
            Box::new(move |z: &LogPoint| Ok(np.eval(z.to_complex()) + s.eval(z)?)) as Box<Entry<'a>>
        })
        .collect();
    CompanionMatrix::new(Flavor::Differential, diag, C64::new(1.0, 0.0))
}

/// Outcome of the non-resonance test.
#[derive(Clone, Debug, PartialEq)]
pub struct NonresonanceReport {
    pub passed: bool,
    /// 1-based offending pair and the integer `n` with `t_j/t_k = qⁿ`.
    pub witness: Option<(usize, usize, i64)>,
}

/// Relative tolerance for `log_q(t_j/t_k) ∈ ℤ`.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

/// For every pair with equal valuations, require `t_j/t_k ∉ q^ℤ`.
pub fn check_nonresonance_data(data: &[(Valuation, C64)], q: QParam) -> NonresonanceReport {
    for j in 0..data.len() {
        for k in (j + 1)..data.len() {
            if data[j].0 != data[k].0 || data[j].0 == Valuation::Infinite {
                continue;
            }
            let r = data[j].1 / data[k].1;
            if r.arg().abs() > RESONANCE_TOLERANCE {
                continue;
            }
            let x = r.norm().ln() / q.ln_q();
            let n = x.round();
            if (x - n).abs() < RESONANCE_TOLERANCE {
                return NonresonanceReport {
                    passed: false,
                    witness: Some((j + 1, k + 1, n as i64)),
                };
            }
        }
    }
    NonresonanceReport {
        passed: true,
        witness: None,
    }
}

pub fn check_nonresonance(op: &FactoredQOperator) -> Result<NonresonanceReport> {
    let g = op.formal_g(2)?;
    let data: Vec<(Valuation, C64)> = g.iter().map(|s| (s.valuation(), s.leading())).collect();
    Ok(check_nonresonance_data(&data, op.q()))
}

/// The upper-triangular formal gauge `Ĝ` with `σ_q(Ĝ)·D = C·Ĝ`,
/// `D = diag(t_j z^{v_j})`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalGauge {
    entries: Vec<Vec<LaurentSeries>>,
    valuations: Vec<i32>,
    leading: Vec<C64>,
    q: QParam,
    order: i32,
}

impl FormalGauge {
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// `ĝ_{j,k}` (0-based); zero below the diagonal.
    pub fn entry(&self, j: usize, k: usize) -> &LaurentSeries {
        &self.entries[j][k]
    }

    /// `(v_j, t_j)` of `D`.
    pub fn normal_form(&self) -> Vec<(i32, C64)> {
        self.valuations.iter().copied().zip(self.leading.iter().copied()).collect()
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn truncation(&self) -> i32 {
        self.order
    }

    /// Largest coefficient of `σ_q(Ĝ)D − CĜ`, relative to the coefficient
    /// scale of the two products, over all known coefficients.
    pub fn residual(&self, g: &[LaurentSeries]) -> f64 {
        let m = self.order();
        let qc = C64::new(self.q.q(), 0.0);
        let mut worst: f64 = 0.0;
        for j in 0..m {
            for k in j..m {
                let d = LaurentSeries::monomial(self.leading[k], self.valuations[k]);
                let lhs = self.entries[j][k].scale_argument(qc).mul(&d);
                let mut rhs = g[j].mul(&self.entries[j][k]);
                if k > j {
                    rhs = rhs.add(&self.entries[j + 1][k].scale(qc - 1.0));
                }
                let diff = lhs.sub(&rhs);
                let scale = lhs
                    .terms()
                    .chain(rhs.terms())
                    .map(|t| t.1.norm())
                    .fold(1e-300, f64::max);
                for (_, c) in diff.terms() {
                    worst = worst.max(c.norm() / scale);
                }
            }
        }
        worst
    }
}

/// The gauge of an operator at its q.
pub fn formal_gauge(op: &FactoredQOperator, order: i32) -> Result<FormalGauge> {
    let g = op.formal_g(order + 8 * op.order() as i32 + 8)?;
    formal_gauge_from_series(&g, op.q(), order)
}

/// Solve `σ_q(Ĝ)D = CĜ` coefficientwise for given expansions `g_j`.
/// Each entry carries `order` coefficients past its valuation.
pub fn formal_gauge_from_series(g: &[LaurentSeries], q: QParam, order: i32) -> Result<FormalGauge> {
    let m = g.len();
    let mut v = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    let mut rel = Vec::with_capacity(m);
    for (j, gj) in g.iter().enumerate() {
        let vj = gj.valuation().finite().ok_or_else(|| {
            Error::InvalidOperator(format!("g_{} vanishes identically", j + 1))
        })?;
        v.push(vj);
        t.push(gj.leading());
        rel.push(gj.truncation_order().saturating_sub(vj));
    }
    let nr = check_nonresonance_data(
        &v.iter().zip(&t).map(|(a, b)| (Valuation::Finite(*a), *b)).collect::<Vec<_>>(),
        q,
    );
    if let Some((j, k, n)) = nr.witness {
        return Err(Error::Resonance { j, k, n });
    }
    let qf = q.q();
    let gamma = |j: usize, i: i32| g[j].coeff(v[j] + i);
    let mut entries = vec![vec![LaurentSeries::zero(crate::series::EXACT); m]; m];
    for k in (0..m).rev() {
        // diagonal: a_s t_k (q^s − 1) = Σ_{i≥1} γ_{k,i} a_{s−i}, a_0 = 1
        let n = order.min(rel[k]).max(1) as usize;
        let mut a = vec![C64::new(0.0, 0.0); n];
        a[0] = C64::new(1.0, 0.0);
        for s in 1..n {
            let mut acc = C64::new(0.0, 0.0);
            for i in 1..=s {
                acc += gamma(k, i as i32) * a[s - i];
            }
            a[s] = acc / (t[k] * (qf.powi(s as i32) - 1.0));
        }
        entries[k][k] = LaurentSeries::new(0, a, n as i32);
        for j in (0..k).rev() {
            entries[j][k] = off_diagonal(j, k, &entries[j + 1][k], &v, &t, &rel, &gamma, qf, order)?;
        }
    }
    Ok(FormalGauge {
        entries,
        valuations: v,
        leading: t,
        q,
        order,
    })
}

#[allow(clippy::too_many_arguments)]
fn off_diagonal(
    j: usize,
    k: usize,
    b: &LaurentSeries,
    v: &[i32],
    t: &[C64],
    rel: &[i32],
    gamma: &dyn Fn(usize, i32) -> C64,
    qf: f64,
    order: i32,
) -> Result<LaurentSeries> {
    let minv = v[j].min(v[k]);
    let vb = match b.valuation() {
        Valuation::Infinite => return Ok(LaurentSeries::zero(crate::series::EXACT)),
        Valuation::Finite(x) => x,
    };
    let pred = vb - minv;
    let top = (pred + order)
        .min(b.truncation_order().saturating_sub(minv))
        .min(pred.saturating_add(rel[j]));
    let len = (top - pred).max(0) as usize;
    let mut a = vec![C64::new(0.0, 0.0); len];
    let get = |a: &[C64], s: i32| -> C64 {
        if s < pred || s >= pred + a.len() as i32 {
            C64::new(0.0, 0.0)
        } else {
            a[(s - pred) as usize]
        }
    };
    for idx in 0..len {
        let s = pred + idx as i32;
        let bn = b.coeff(s + minv) * (qf - 1.0);
        let value = if v[k] < v[j] {
            // t_k q^s a_s = Σ_i γ_{j,i} a_{s+v_k−v_j−i} + (q−1) b_{s+v_k}
            let mut acc = bn;
            let base = s + v[k] - v[j];
            for i in 0..=(base - pred).max(-1) {
                acc += gamma(j, i) * get(&a, base - i);
            }
            acc / (t[k] * qf.powi(s))
        } else if v[k] > v[j] {
            // t_j a_s = t_k q^{s+v_j−v_k} a_{s+v_j−v_k} − Σ_{i≥1} γ_{j,i} a_{s−i} − (q−1) b_{s+v_j}
            let sh = s + v[j] - v[k];
            let mut acc = t[k] * qf.powi(sh) * get(&a, sh) - bn;
            for i in 1..=idx as i32 {
                acc -= gamma(j, i) * get(&a, s - i);
            }
            acc / t[j]
        } else {
            // a_s (t_k q^s − t_j) = Σ_{i≥1} γ_{j,i} a_{s−i} + (q−1) b_{s+v}
            let mut acc = bn;
            for i in 1..=idx as i32 {
                acc += gamma(j, i) * get(&a, s - i);
            }
            let den = t[k] * qf.powi(s) - t[j];
            if den.norm() <= 1e-12 * t[j].norm() {
                return Err(Error::Resonance {
                    j: j + 1,
                    k: k + 1,
                    n: s as i64,
                });
            }
            acc / den
        };
        a[idx] = value;
    }
    if len > 0 && a[0] == C64::new(0.0, 0.0) {
        let found = a
            .iter()
            .position(|c| *c != C64::new(0.0, 0.0))
            .map(|p| format!("{}", pred + p as i32))
            .unwrap_or_else(|| "+inf".into());
        return Err(Error::ValuationMismatch {
            j: j + 1,
            k: k + 1,
            predicted: format!("{pred}"),
            found,
        });
    }
    Ok(LaurentSeries::new(pred, a, top))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn poly(t: &[(i32, f64)]) -> LaurentSeries {
        LaurentSeries::polynomial(&t.iter().map(|(e, x)| (*e, c(*x))).collect::<Vec<_>>())
    }

    #[test]
    fn operator_validation() {
        let ok = FactoredDifferentialOperator::new(vec![
            poly(&[(-2, -2.0)]),
            poly(&[(-1, -1.0)]),
            LaurentSeries::zero(crate::series::EXACT),
        ]);
        assert!(ok.is_ok());
        let shuffled = FactoredDifferentialOperator::new(vec![
            poly(&[(-1, -1.0)]),
            poly(&[(-2, -2.0)]),
            LaurentSeries::zero(crate::series::EXACT),
        ]);
        assert!(shuffled.is_err());
        let nonneg = FactoredDifferentialOperator::new(vec![poly(&[(0, 1.0)]), poly(&[(1, 1.0)])]);
        assert!(nonneg.is_err());
    }

    #[test]
    fn nonresonance_examples() {
        let q = QParam::new(2.0).unwrap();
        let r = check_nonresonance_data(&[(Valuation::Finite(-1), c(1.0)), (Valuation::Finite(0), c(1.0))], q);
        assert!(r.passed);
        let r = check_nonresonance_data(&[(Valuation::Finite(0), c(4.0)), (Valuation::Finite(0), c(1.0))], q);
        assert_eq!(r.witness, Some((1, 2, 2)));
        let r = check_nonresonance_data(&[(Valuation::Finite(0), c(3.0)), (Valuation::Finite(0), c(1.0))], q);
        assert!(r.passed);
    }

    #[test]
    fn valuation_prediction() {
        let q = QParam::new(1.3).unwrap();
        let g = vec![
            poly(&[(-2, 1.0), (0, 0.5)]).truncate(40),
            poly(&[(-1, 1.0), (0, 0.25)]).truncate(40),
            poly(&[(0, 1.0), (1, 0.1)]).truncate(40),
        ];
        let gauge = formal_gauge_from_series(&g, q, 20).unwrap();
        assert_eq!(gauge.entry(0, 2).valuation(), Valuation::Finite(3));
        assert_eq!(gauge.entry(1, 2).valuation(), Valuation::Finite(1));
        assert!(gauge.residual(&g) < 1e-12);
    }
}
