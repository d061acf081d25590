//! Experiment configuration (TOML).
//!
//! ```toml
//! q = [1.2, 1.1, 1.05]
//! mode = "pure"                      # or "with-constants"
//!
//! [operator]
//! example = "sec43"                  # built-in; or give `coefficients`
//! # coefficients = [[[-1, -1.0, 0.0]], []]   # per f̃_j: (exponent, re, im) triples
//! deformation = "example"            # "example" (built-in closed form) or "recursion"
//!
//! [[operator.components]]            # level decomposition of f̃_j^{>0}
//! index = 1                          # 1-based j
//! level = 1
//! image = "log1p"                    # "zero", "log1p" or "rational"
//! terms = [[1, 1.0, 0.0]]
//!
//! [sector]
//! direction = "auto"                 # or a number (radians)
//!
//! [grid]
//! radial = 5
//! angular = 5
//! r_min = 0.1
//! r_max = 0.3
//! arg_min = -0.3
//! arg_max = 0.3
//! ```

use crate::deformation::RationalZinv;
use crate::error::{Error, Result};
use crate::harness::registry::{self, Deformation, Example};
use crate::operators::FactoredDifferentialOperator;
use crate::series::{LaurentSeries, DEFAULT_ORDER, EXACT};
use crate::solutions::{ConnectionMode, GridSpec};
use crate::summation::{BorelImage, PositiveComponent};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// `(exponent, re, im)`.
pub type Term = (i32, f64, f64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    /// 1-based coefficient index.
    pub index: usize,
    pub level: u32,
    /// Borel image name; omitted for convergent components.
    #[serde(default)]
    pub image: Option<String>,
    pub terms: Vec<Term>,
    /// Numerator and denominator of a rational image, `(re, im)` by degree.
    #[serde(default)]
    pub numerator: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub denominator: Option<Vec<(f64, f64)>>,
    /// Truncation order of `terms` (exact when omitted).
    #[serde(default)]
    pub truncation: Option<i32>,
}

/// Replaces `1+(q−1)f_j^{≤0}` by a fixed rational function of `z^{−1}`
/// (coefficients by power of `z^{−1}`), for probing the invariant checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideSpec {
    pub index: usize,
    pub numerator: Vec<(f64, f64)>,
    pub denominator: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    #[serde(default)]
    pub example: Option<String>,
    #[serde(default)]
    pub coefficients: Option<Vec<Vec<Term>>>,
    /// Truncation order per coefficient (exact when omitted).
    #[serde(default)]
    pub truncation: Option<Vec<i32>>,
    #[serde(default = "default_deformation")]
    pub deformation: String,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub overrides: Vec<OverrideSpec>,
}

fn default_deformation() -> String {
    "example".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Fixed(f64),
    Auto(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub direction: Direction,
    /// Half-width override; defaults to the admissible margin.
    #[serde(default)]
    pub half_width: Option<f64>,
}

impl Default for SectorSpec {
    fn default() -> Self {
        Self {
            direction: Direction::Auto("auto".into()),
            half_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// q-side system residual.
    pub residual_q: f64,
    /// Differential-side residual.
    pub residual_diff: f64,
    /// Relative tail tolerance for products, spirals and ray integrals.
    pub quadrature: f64,
    /// Cauchy tolerance and depth for connection constants.
    pub connection: f64,
    pub connection_depth: usize,
    /// Formal gauge residual and order.
    pub gauge: f64,
    pub gauge_order: i32,
    /// Finite-N identity.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual_q: 1e-9,
            residual_diff: 1e-6,
            quadrature: 1e-16,
            connection: 1e-10,
            connection_depth: 20_000,
            gauge: 1e-12,
            gauge_order: 20,
            identity: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaySpec {
    pub ratio: f64,
    pub order: usize,
}

impl Default for RaySpec {
    fn default() -> Self {
        Self { ratio: 0.5, order: 16 }
    }
}

/// Points for `eval`, in polar form `(modulus, argument)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    #[serde(default)]
    pub points: Vec<(f64, f64)>,
    /// Any of "theta", "qexp", "gamma_p", "solutions".
    #[serde(default = "default_functions")]
    pub functions: Vec<String>,
}

fn default_functions() -> Vec<String> {
    vec!["theta".into(), "qexp".into(), "gamma_p".into(), "solutions".into()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operator: OperatorSpec,
    pub q: Vec<f64>,
    #[serde(default = "default_q_max")]
    pub q_max: f64,
    #[serde(default)]
    pub mode: ConnectionMode,
    #[serde(default)]
    pub sector: SectorSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub ray: RaySpec,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_q_max() -> f64 {
    crate::operators::DEFAULT_Q_MAX
}

fn series_from_terms(terms: &[Term], truncation: Option<i32>) -> LaurentSeries {
    let t: Vec<(i32, C64)> = terms.iter().map(|&(e, re, im)| (e, C64::new(re, im))).collect();
    LaurentSeries::from_terms(&t, truncation.unwrap_or(EXACT))
}

fn complex_list(v: &[(f64, f64)]) -> Vec<C64> {
    v.iter().map(|&(re, im)| C64::new(re, im)).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::Config("q list is empty".into()));
        }
        for &q in &self.q {
            if !(q > 1.0 && q <= self.q_max) {
                return Err(Error::Config(format!("q = {q} outside the validity interval (1, {}]", self.q_max)));
            }
        }
        if let Direction::Auto(s) = &self.sector.direction {
            if s != "auto" {
                return Err(Error::Config(format!("sector direction must be a number or \"auto\", got \"{s}\"")));
            }
        }
        match (&self.operator.example, &self.operator.coefficients) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either operator.example or operator.coefficients, not both".into()))
            }
            (None, None) => return Err(Error::Config("operator needs an example name or coefficients".into())),
            _ => {}
        }
        if !matches!(self.operator.deformation.as_str(), "example" | "recursion") {
            return Err(Error::Config(format!(
                "deformation must be \"example\" or \"recursion\", got \"{}\"",
                self.operator.deformation
            )));
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }

    /// Build the example: a built-in, or one assembled from coefficients.
    pub fn example(&self) -> Result<Example> {
        let mut ex = match (&self.operator.example, &self.operator.coefficients) {
            (Some(name), _) => registry::lookup(name)?,
            (None, Some(coeffs)) => {
                let trunc = self.operator.truncation.clone().unwrap_or_default();
                let series: Vec<LaurentSeries> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, t)| series_from_terms(t, trunc.get(j).copied()))
                    .collect();
                let m = series.len();
                Example {
                    name: "custom".into(),
                    diff: FactoredDifferentialOperator::new(series)?,
                    components: vec![vec![]; m],
                    deformation: Deformation::Recursion,
                }
            }
            (None, None) => return Err(Error::Config("operator needs an example name or coefficients".into())),
        };
        if !self.operator.components.is_empty() {
            let m = ex.order();
            let mut comps = vec![vec![]; m];
            for c in &self.operator.components {
                if c.index == 0 || c.index > m {
                    return Err(Error::Config(format!("component index {} outside 1..={m}", c.index)));
                }
                let image = match c.image.as_deref() {
                    None => None,
                    Some("zero") => Some(BorelImage::zero(c.level)),
                    Some("log1p") => Some(BorelImage::log1p()),
                    Some("rational") => {
                        let (n, d) = match (&c.numerator, &c.denominator) {
                            (Some(n), Some(d)) => (complex_list(n), complex_list(d)),
                            _ => {
                                return Err(Error::Config(
                                    "rational Borel image needs numerator and denominator".into(),
                                ))
                            }
                        };
                        Some(BorelImage::rational(n, d, c.level)?)
                    }
                    Some(other) => return Err(Error::Config(format!("unknown Borel image '{other}'"))),
                };
                let trunc = c.truncation.or(if c.image.is_some() { Some(DEFAULT_ORDER + 1) } else { None });
                comps[c.index - 1].push(PositiveComponent {
                    series: series_from_terms(&c.terms, trunc),
                    level: c.level,
                    image,
                });
            }
            ex.components = comps;
        }
        if self.operator.deformation == "recursion" {
            ex.deformation = Deformation::Recursion;
        }
        Ok(ex)
    }

    /// Nonpositive-part overrides by 0-based index.
    pub fn overrides(&self) -> Result<Vec<(usize, RationalZinv)>> {
        self.operator
            .overrides
            .iter()
            .map(|o| {
                if o.index == 0 {
                    return Err(Error::Config("override index is 1-based".into()));
                }
                Ok((
                    o.index - 1,
                    RationalZinv::new(complex_list(&o.numerator), complex_list(&o.denominator))?,
                ))
            })
            .collect()
    }
}
