//! Built-in examples.
//!
//! - `sec3-m2`: `f̃ = (−z^{−1}, 0)`, deformed to `g_1 = 1/(1+(q−1)q^{−1}z^{−1})`, `g_2 = 1`.
//! - `sec43`: `f̃ = (−2z^{−2}, −z^{−1}, 0)`, deformed to
//!   `g_1 = 1/(1+(q−1)(1+q)q^{−2}z^{−2})`, `g_2 = 1/(1+(q−1)q^{−1}z^{−1})`, `g_3 = 1`.
//! - `euler`: `f̃_1 = −z^{−1} + Σ(−1)ⁿn!z^{n+1}`, `f̃_2 = 0`, deformed by the
//!   downward recursion, with Borel image `log(1+ζ)`.

use crate::deformation::{combine, deform_operator, deform_positive, RationalZinv};
use crate::domain::QParam;
use crate::error::{Error, Result};
use crate::operators::{FactoredDifferentialOperator, FactoredQOperator};
use crate::series::{LaurentSeries, DEFAULT_ORDER, EXACT};
use crate::summation::{sum_in_direction, BorelImage, PositiveComponent, SummedPositivePart};
use num_complex::Complex64 as C64;

pub const NAMES: [&str; 3] = ["sec3-m2", "sec43", "euler"];

type ClosedForm = fn(QParam) -> Vec<RationalZinv>;

/// How an example is carried to the q-side.
#[derive(Clone, Copy, Debug)]
pub enum Deformation {
    /// The downward recursion from `f̃_m`.
    Recursion,
    /// Explicit `1+(q−1)f_j^{≤0}` as rational functions of `z^{−1}`.
    ClosedForm(ClosedForm),
}

/// A differential operator together with its level data and deformation.
#[derive(Clone, Debug)]
pub struct Example {
    pub name: String,
    pub diff: FactoredDifferentialOperator,
    pub components: Vec<Vec<PositiveComponent>>,
    pub deformation: Deformation,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `Σ_{n<order} (−1)ⁿ n! z^{n+1}`.
pub fn euler_series(order: i32) -> LaurentSeries {
    let mut fact = 1.0;
    let mut terms = Vec::new();
    for n in 0..order {
        if n > 0 {
            fact *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        terms.push((n + 1, c(sign * fact)));
    }
    LaurentSeries::from_terms(&terms, order + 1)
}

fn sec3_closed(q: QParam) -> Vec<RationalZinv> {
    let a = (q.q() - 1.0) / q.q();
    vec![
        RationalZinv::new(vec![c(1.0)], vec![c(1.0), c(a)]).expect("nonzero denominator"),
        RationalZinv::one(),
    ]
}

fn sec43_closed(q: QParam) -> Vec<RationalZinv> {
    let qq = q.q();
    let a2 = (qq - 1.0) * (1.0 + qq) / (qq * qq);
    let a1 = (qq - 1.0) / qq;
    vec![
        RationalZinv::new(vec![c(1.0)], vec![c(1.0), c(0.0), c(a2)]).expect("nonzero denominator"),
        RationalZinv::new(vec![c(1.0)], vec![c(1.0), c(a1)]).expect("nonzero denominator"),
        RationalZinv::one(),
    ]
}

/// Look up a built-in example by name.
pub fn lookup(name: &str) -> Result<Example> {
    let poly = |t: &[(i32, f64)]| LaurentSeries::polynomial(&t.iter().map(|&(e, x)| (e, c(x))).collect::<Vec<_>>());
    let zero = LaurentSeries::zero(EXACT);
    let ex = match name {
        "sec3-m2" => Example {
            name: name.into(),
            diff: FactoredDifferentialOperator::new(vec![poly(&[(-1, -1.0)]), zero])?,
            components: vec![vec![], vec![]],
            deformation: Deformation::ClosedForm(sec3_closed),
        },
        "sec43" => Example {
            name: name.into(),
            diff: FactoredDifferentialOperator::new(vec![poly(&[(-2, -2.0)]), poly(&[(-1, -1.0)]), zero])?,
            components: vec![vec![], vec![], vec![]],
            deformation: Deformation::ClosedForm(sec43_closed),
        },
        "euler" => {
            let pos = euler_series(DEFAULT_ORDER);
            Example {
                name: name.into(),
                diff: FactoredDifferentialOperator::new(vec![poly(&[(-1, -1.0)]).add(&pos), zero])?,
                components: vec![
                    vec![PositiveComponent {
                        series: pos,
                        level: 1,
                        image: Some(BorelImage::log1p()),
                    }],
                    vec![],
                ],
                deformation: Deformation::Recursion,
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown example '{name}' (known: {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(ex)
}

impl Example {
    pub fn order(&self) -> usize {
        self.diff.order()
    }

    /// The q-operator of the example's own deformation.
    pub fn q_operator(&self, q: QParam) -> Result<FactoredQOperator> {
        match self.deformation {
            Deformation::Recursion => self.q_operator_recursion(q),
            Deformation::ClosedForm(f) => {
                let families = f(q)
                    .into_iter()
                    .enumerate()
                    .map(|(j, g)| {
                        let pos = deform_positive(&self.diff.positive(j), &self.components[j], q)?;
                        combine(pos, g)
                    })
                    .collect::<Result<Vec<_>>>()?;
                FactoredQOperator::new(families, q)
            }
        }
    }

    /// The q-operator with some nonpositive parts replaced by given rational
    /// functions of `z^{−1}` (0-based indices).
    pub fn q_operator_with(&self, q: QParam, overrides: &[(usize, RationalZinv)]) -> Result<FactoredQOperator> {
        let op = self.q_operator(q)?;
        if overrides.is_empty() {
            return Ok(op);
        }
        let mut families = op.families().to_vec();
        for (j, g) in overrides {
            let fam = families.get(*j).ok_or_else(|| {
                Error::Config(format!("override index {} outside 1..={}", j + 1, self.order()))
            })?;
            families[*j] = combine(fam.positive().clone(), g.clone())?;
        }
        FactoredQOperator::new(families, q)
    }

    /// The q-operator from the downward recursion, whatever the example's own
    /// deformation is.
    pub fn q_operator_recursion(&self, q: QParam) -> Result<FactoredQOperator> {
        deform_operator(&self.diff, &self.components, q)
    }

    /// Singular directions of every supplied Borel image.
    pub fn singular_directions(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .components
            .iter()
            .flatten()
            .filter_map(|c| c.image.as_ref())
            .flat_map(|i| i.singular_directions().to_vec())
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }

    /// `S̃^d(f̃_j^{>0})` for every `j`.
    pub fn summed(&self, d: f64) -> Result<Vec<SummedPositivePart>> {
        (0..self.order())
            .map(|j| {
                let pos = self.diff.positive(j);
                if pos.is_zero() {
                    Ok(SummedPositivePart::zero())
                } else {
                    sum_in_direction(&pos, &self.components[j], d)
                }
            })
            .collect()
    }
}
