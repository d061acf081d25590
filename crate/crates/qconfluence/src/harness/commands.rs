//! The five CLI commands. Each returns a [`RunReport`] and the text to print;
//! files go to the output directory.

use crate::deformation::RationalZinv;
use crate::domain::{angular_distance, LogPoint, QParam, SectorDomain};
use crate::error::{Error, Result};
use crate::harness::config::{Direction, ExperimentConfig};
use crate::harness::registry::{self, Example};
use crate::harness::report::{InvariantResult, RunReport};
use crate::harness::svg;
use crate::operators::{check_nonresonance, formal_gauge, FactoredQOperator, Flavor};
use crate::qfunctions::{gamma_p, qexp, ThetaEvaluator};
use crate::solutions::{
    boundedness_sample, confluence_error, connection_matrix, diff_residual, finite_n_identity_residual,
    q_residual, sample_diff, sample_rows, write_csv, ConnectionMode, DiffDiagonal, DiffFundamental, GridSpec,
    QDiagonal, QFundamental, SampleRow,
};
use crate::summation::{admissible_direction, AdmissibleSector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Values given on the command line, applied over the config file.
#[derive(Clone, Debug, Default)]
pub struct CliOverrides {
    pub q: Option<Vec<f64>>,
    /// Pass threshold of the residual and identity checks.
    pub tol: Option<f64>,
    pub mode: Option<ConnectionMode>,
}

impl CliOverrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(q) = &self.q {
            cfg.q = q.clone();
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("--tol must be positive, got {t}")));
            }
            cfg.tolerances.residual_q = t;
            cfg.tolerances.residual_diff = t;
            cfg.tolerances.identity = t;
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        cfg.validate()
    }
}

/// Output of one command.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub text: String,
}

/// Direction and half-opening of the working sector.
#[derive(Clone, Debug, PartialEq)]
pub struct Sector {
    pub direction: f64,
    pub half_width: f64,
    pub admissible: Option<AdmissibleSector>,
}

impl Sector {
    pub fn domain(&self) -> Result<SectorDomain> {
        SectorDomain::new(self.direction, self.half_width, f64::INFINITY)
    }
}

/// A configuration resolved into an example, its overrides and a sector.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub cfg: ExperimentConfig,
    pub example: Example,
    pub overrides: Vec<(usize, RationalZinv)>,
    sector: std::result::Result<Sector, Error>,
}

fn resolve_sector(cfg: &ExperimentConfig, ex: &Example) -> Result<Sector> {
    let singular = ex.singular_directions();
    match cfg.sector.direction {
        Direction::Auto(_) => {
            let a = admissible_direction(&ex.diff, &singular)?;
            Ok(Sector {
                direction: a.direction,
                half_width: cfg.sector.half_width.unwrap_or(a.half_width),
                admissible: Some(a),
            })
        }
        Direction::Fixed(d) => {
            let a = admissible_direction(&ex.diff, &singular).ok();
            let half_width = match cfg.sector.half_width {
                Some(h) => h,
                None => {
                    let inside = a.as_ref().and_then(|a| {
                        a.intervals.iter().find_map(|&(lo, hi)| {
                            [d, d - 2.0 * PI, d + 2.0 * PI]
                                .into_iter()
                                .find(|x| *x > lo && *x < hi)
                                .map(|x| 0.5 * (x - lo).min(hi - x))
                        })
                    });
                    let dist = singular.iter().map(|s| angular_distance(*s, d)).fold(f64::INFINITY, f64::min);
                    match inside {
                        Some(h) => h.min(dist),
                        None => {
                            return Err(Error::EmptyIntersection(format!(
                                "direction {d} is not admissible; set sector.half_width to use it anyway"
                            )))
                        }
                    }
                }
            };
            if !(half_width > 0.0) {
                return Err(Error::Config(format!("sector half-width must be positive, got {half_width}")));
            }
            Ok(Sector {
                direction: d,
                half_width,
                admissible: a,
            })
        }
    }
}

impl Prepared {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let example = cfg.example()?;
        let overrides = cfg.overrides()?;
        let sector = resolve_sector(&cfg, &example);
        Ok(Self {
            cfg,
            example,
            overrides,
            sector,
        })
    }

    pub fn sector(&self) -> Result<&Sector> {
        self.sector.as_ref().map_err(|e| e.clone())
    }

    /// The configured grid, or 5×5 on `|z| ∈ [0.5, 1]`, `arg ∈ d ± ε/2`.
    pub fn grid(&self) -> Result<GridSpec> {
        if let Some(g) = self.cfg.grid {
            return Ok(g);
        }
        let s = self.sector()?;
        Ok(GridSpec {
            radial: 5,
            angular: 5,
            r_min: 0.5,
            r_max: 1.0,
            arg_min: s.direction - 0.5 * s.half_width,
            arg_max: s.direction + 0.5 * s.half_width,
        })
    }

    /// Grid points, all required to lie in the sector.
    pub fn grid_points(&self) -> Result<Vec<LogPoint>> {
        let dom = self.sector()?.domain()?;
        let pts = self.grid()?.points()?;
        for z in &pts {
            dom.check(z, "grid point outside the working sector")?;
        }
        Ok(pts)
    }

    pub fn q_operator(&self, q: f64) -> Result<FactoredQOperator> {
        let qp = QParam::new(q)?;
        Ok(self.example.q_operator_with(qp, &self.overrides)?.with_q_max(self.cfg.q_max))
    }

    pub fn q_fundamental(&self, q: f64) -> Result<QFundamental> {
        let tol = self.cfg.tolerances.quadrature;
        let diag = QDiagonal::new(self.q_operator(q)?, &self.example.diff)?.with_tolerance(tol);
        Ok(QFundamental::new(diag).with_tolerance(tol))
    }

    pub fn diff_fundamental(&self) -> Result<DiffFundamental> {
        let d = self.sector()?.direction;
        let diag = DiffDiagonal::new(self.example.diff.clone(), self.example.summed(d)?)?;
        DiffFundamental::new(diag)
            .with_tolerance(self.cfg.tolerances.quadrature)
            .with_subdivision(self.cfg.ray.ratio, self.cfg.ray.order)
    }

    /// `U(z)` for every grid point in the given mode. With constants, the
    /// spiral limits `c_{j,k}(z)` are estimated at each point first.
    pub fn sample_q_mode(&self, fund: &QFundamental, grid: &[LogPoint], mode: ConnectionMode) -> Result<Vec<Vec<Vec<C64>>>> {
        let t = &self.cfg.tolerances;
        let gauge = match mode {
            ConnectionMode::Pure => None,
            ConnectionMode::WithConstants => Some(formal_gauge(fund.diagonal().operator(), t.gauge_order)?),
        };
        grid.par_iter()
            .map(|z| {
                let loc = || format!("z = {:.6e}·e^(i·{:.6})", z.modulus(), z.argument());
                match &gauge {
                    None => fund.matrix(z),
                    Some(g) => {
                        let c = connection_matrix(fund, g, z, t.connection_depth, t.connection)?;
                        fund.clone().with_constants(c).matrix(z)
                    }
                }
                .map_err(|e| e.at(loc()))
            })
            .collect()
    }

    /// Output directory: `--out`, else `output` from the config, else `out`.
    pub fn out_dir(&self, out: Option<&Path>) -> PathBuf {
        out.map(Path::to_path_buf)
            .or_else(|| self.cfg.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn csv_string(rows: &[SampleRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn pi_multiple(x: f64) -> String {
    format!("{:.6}π", x / PI)
}

/// Default configuration for a built-in example.
pub fn builtin_config(name: &str, q: &[f64]) -> Result<ExperimentConfig> {
    registry::lookup(name)?;
    let q_list = q.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    ExperimentConfig::from_toml(&format!("q = [{q_list}]\n[operator]\nexample = \"{name}\"\n"))
}

/// q values of the built-in verify suite.
pub const DEFAULT_SUITE_Q: [f64; 3] = [1.2, 1.1, 1.05];

// ---------------------------------------------------------------- directions

pub fn directions(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let prep = Prepared::new(cfg.clone())?;
    let s = prep.sector()?.clone();
    let a = match &s.admissible {
        Some(a) => a.clone(),
        None => admissible_direction(&prep.example.diff, &prep.example.singular_directions())?,
    };
    let mut text = String::new();
    let mut csv = String::from("set,start,end\n");
    for c in &a.certificate {
        let _ = writeln!(text, "j={} (mu={}, leading={}):", c.index, c.mu, c.leading);
        for &(lo, hi) in &c.arcs {
            let _ = writeln!(text, "  ({lo:.12}, {hi:.12})  = ({}, {})", pi_multiple(lo), pi_multiple(hi));
            let _ = writeln!(csv, "j={},{lo:.17e},{hi:.17e}", c.index);
        }
    }
    let _ = writeln!(text, "admissible intervals:");
    for &(lo, hi) in &a.intervals {
        let _ = writeln!(text, "  ({lo:.12}, {hi:.12})  = ({}, {})", pi_multiple(lo), pi_multiple(hi));
        let _ = writeln!(csv, "admissible,{lo:.17e},{hi:.17e}");
    }
    let sing = prep.example.singular_directions();
    if !sing.is_empty() {
        let _ = writeln!(text, "singular directions: {sing:?}");
    }
    let _ = writeln!(
        text,
        "d = {:.12} ({}), epsilon = {:.12} ({})",
        s.direction,
        pi_multiple(s.direction),
        s.half_width,
        pi_multiple(s.half_width)
    );
    let dir = prep.out_dir(out);
    write_file(&dir, "directions.csv", &csv)?;
    write_file(&dir, "directions.svg", &svg::arc_diagram(&csv)?)?;
    let mut report = RunReport::new("directions", Some(cfg));
    report.notes.push(format!("d = {}, epsilon = {}", s.direction, s.half_width));
    write_file(&dir, "report.json", &report.to_json())?;
    Ok(Outcome { report, text })
}

// ---------------------------------------------------------------- deform

pub fn deform(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let prep = Prepared::new(cfg.clone())?;
    let mut text = String::new();
    let mut csv = String::from("q,j,nonpositive,c_inf_re,c_inf_im,slope\n");
    let mut report = RunReport::new("deform", Some(cfg));
    for &q in &cfg.q {
        let op = prep.q_operator(q)?;
        let slopes = op.slopes()?;
        let _ = writeln!(text, "q = {q}");
        for j in 0..op.order() {
            let fam = op.family(j);
            let c = fam.c_inf()?;
            let _ = writeln!(
                text,
                "  j={}: 1+(q-1)f^<=0 = {}   c_inf = {c}   slope = {}",
                j + 1,
                fam.nonpositive(),
                slopes[j]
            );
            let _ = writeln!(
                csv,
                "{q:.17e},{},\"{}\",{:.17e},{:.17e},{}",
                j + 1,
                fam.nonpositive(),
                c.re,
                c.im,
                slopes[j]
            );
        }
        let nr = check_nonresonance(&op)?;
        let detail = nr.witness.map(|(j, k, n)| format!("t_{j}/t_{k} = q^{n}")).unwrap_or_default();
        let _ = writeln!(text, "  nonresonant: {} {detail}", nr.passed);
        report.push(InvariantResult::flag("nonresonance", Some(q), nr.passed, detail));
    }
    let dir = prep.out_dir(out);
    write_file(&dir, "deform.csv", &csv)?;
    write_file(&dir, "report.json", &report.to_json())?;
    Ok(Outcome { report, text })
}

// ---------------------------------------------------------------- eval

pub fn eval(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let prep = Prepared::new(cfg.clone())?;
    let points: Vec<LogPoint> = cfg
        .eval
        .points
        .iter()
        .map(|&(r, a)| LogPoint::new(r, a))
        .collect::<Result<_>>()?;
    let want = |f: &str| cfg.eval.functions.iter().any(|x| x == f);
    for f in &cfg.eval.functions {
        if !matches!(f.as_str(), "theta" | "qexp" | "gamma_p" | "solutions") {
            return Err(Error::Config(format!("unknown eval function '{f}'")));
        }
    }
    let mut text = String::new();
    let mut csv = String::from("function,q,re_z,im_z,re,im\n");
    for &q in &cfg.q {
        let qp = QParam::new(q)?;
        let th = ThetaEvaluator::new(qp);
        for z in &points {
            let zc = z.to_complex();
            let mut vals: Vec<(&str, C64)> = Vec::new();
            if want("theta") {
                vals.push(("theta", th.theta(z)?));
            }
            if want("qexp") {
                vals.push(("qexp", qexp(zc, q)?));
            }
            if want("gamma_p") {
                vals.push(("gamma_p", gamma_p(zc, qp.p())?));
            }
            for (name, v) in vals {
                let _ = writeln!(csv, "{name},{q:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", zc.re, zc.im, v.re, v.im);
                let _ = writeln!(text, "{name}(z={zc}) at q={q}: {v}");
            }
        }
    }
    let dir = prep.out_dir(out);
    write_file(&dir, "eval.csv", &csv)?;
    if want("solutions") && !points.is_empty() {
        let dom = prep.sector()?.domain()?;
        for z in &points {
            dom.check(z, "eval point outside the working sector")?;
        }
        let mut rows = Vec::new();
        let diff = sample_diff(&prep.diff_fundamental()?, &points)?;
        rows.extend(sample_rows(&points, &diff, Flavor::Differential, None));
        for &q in &cfg.q {
            let fund = prep.q_fundamental(q)?;
            let vals = prep.sample_q_mode(&fund, &points, cfg.mode)?;
            rows.extend(sample_rows(&points, &vals, Flavor::QDifference, Some(q)));
        }
        for r in &rows {
            let _ = writeln!(
                text,
                "u_{}{}(z={}) [{}{}]: {}",
                r.j,
                r.k,
                r.z.to_complex(),
                r.flavor.label(),
                r.q.map(|q| format!(" q={q}")).unwrap_or_default(),
                r.u
            );
        }
        write_file(&dir, "solutions.csv", &csv_string(&rows)?)?;
    }
    let report = RunReport::new("eval", Some(cfg));
    write_file(&dir, "report.json", &report.to_json())?;
    Ok(Outcome { report, text })
}

// ---------------------------------------------------------------- confluence

pub fn confluence(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let prep = Prepared::new(cfg.clone())?;
    let grid = prep.grid_points()?;
    let mut report = RunReport::new("confluence", Some(cfg));
    let t0 = Instant::now();
    let diff = sample_diff(&prep.diff_fundamental()?, &grid)?;
    report.time("differential", t0);
    let mut rows = sample_rows(&grid, &diff, Flavor::Differential, None);
    let mut errors = String::from("q,error\n");
    let mut text = String::from("q, E(q)\n");
    for &q in &cfg.q {
        let t = Instant::now();
        let fund = prep.q_fundamental(q)?;
        let vals = prep.sample_q_mode(&fund, &grid, cfg.mode)?;
        report.time(&format!("q={q}"), t);
        let row = confluence_error(q, &vals, &diff, &grid)?;
        let _ = writeln!(errors, "{q:.17e},{:.17e}", row.error);
        let _ = writeln!(text, "{q}, {:.6e}", row.error);
        for e in &row.entries {
            let _ = writeln!(
                text,
                "    ({},{}) {:.6e} at |z|={:.4}, arg={:.4}",
                e.j, e.k, e.max_error, e.at.0, e.at.1
            );
        }
        rows.extend(sample_rows(&grid, &vals, Flavor::QDifference, Some(q)));
        report.confluence.push(row);
    }
    let samples = csv_string(&rows)?;
    let dir = prep.out_dir(out);
    write_file(&dir, "confluence.csv", &samples)?;
    write_file(&dir, "errors.csv", &errors)?;
    write_file(&dir, "confluence.svg", &svg::error_vs_q(&errors)?)?;
    write_file(&dir, "ray.svg", &svg::ray_profile(&samples)?)?;
    write_file(&dir, "report.json", &report.to_json())?;
    Ok(Outcome { report, text })
}

// ---------------------------------------------------------------- verify

/// Run a check, turning an error into a failed entry.
fn guarded(name: &str, q: Option<f64>, f: impl FnOnce() -> Result<InvariantResult>) -> InvariantResult {
    f().unwrap_or_else(|e| InvariantResult::flag(name, q, false, e.to_string()))
}

/// Relative residual of the functional equations of Θ_q, Λ_{q,a}, e_q and
/// Γ_p at a few fixed points.
pub fn qfunction_residual(q: f64) -> Result<f64> {
    let qp = QParam::new(q)?;
    let th = ThetaEvaluator::new(qp);
    let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(b.norm()).max(1e-300);
    let mut worst: f64 = 0.0;
    let a = C64::new(0.7, 0.4);
    for &(r, arg) in &[(0.3, 0.2), (1.7, -1.1), (0.05, 2.5)] {
        let z = LogPoint::new(r, arg)?;
        let zq = z.scale(q)?;
        worst = worst.max(rel(th.theta(&zq)?, z.to_complex() * th.theta(&z)?));
        worst = worst.max(rel(th.lambda(&zq, a)?, a * th.lambda(&z, a)?));
        let zc = z.to_complex();
        let lhs = (qexp(zc * q, q)? - qexp(zc, q)?) / (q - 1.0);
        worst = worst.max(rel(lhs, zc * qexp(zc, q)?));
    }
    let p = qp.p();
    for &x in &[0.6, 2.5, 4.2] {
        let x = C64::new(x, 0.0);
        let bracket = (1.0 - (x * p.ln()).exp()) / (1.0 - p);
        worst = worst.max(rel(gamma_p(x + 1.0, p)?, bracket * gamma_p(x, p)?));
    }
    Ok(worst)
}

/// Depth of the boundedness samples.
pub const BOUNDEDNESS_DEPTH: usize = 200;
/// Finite-N identity depths.
pub const IDENTITY_DEPTHS: [usize; 3] = [1, 5, 12];

fn subset(grid: &[LogPoint]) -> Vec<LogPoint> {
    match grid.len() {
        0..=3 => grid.to_vec(),
        n => vec![grid[0], grid[n / 2], grid[n - 1]],
    }
}

/// The invariant suite of one configuration.
pub fn verify_one(cfg: &ExperimentConfig) -> Result<RunReport> {
    let prep = Prepared::new(cfg.clone())?;
    let t = cfg.tolerances.clone();
    let label = prep.example.name.clone();
    let mut report = RunReport::new("verify", Some(cfg));
    let name = |s: &str| format!("{label}/{s}");

    report.push(guarded(&name("directions"), None, || {
        let s = prep.sector()?;
        Ok(InvariantResult::flag(
            name("directions"),
            None,
            true,
            format!("d = {:.12}, epsilon = {:.12}", s.direction, s.half_width),
        ))
    }));
    let grid = prep.grid_points();
    let start = Instant::now();
    let diff = prep.diff_fundamental().and_then(|d| {
        let g = grid.clone()?;
        let vals = sample_diff(&d, &g)?;
        Ok((d, vals))
    });
    report.push(guarded(&name("residual-diff"), None, || {
        let (d, _) = diff.as_ref().map_err(|e| e.clone())?;
        let g = grid.clone()?;
        let worst = g
            .par_iter()
            .map(|z| diff_residual(d, z))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(InvariantResult::below(name("residual-diff"), None, worst, t.residual_diff))
    }));
    report.time(&format!("{label}/differential"), start);

    let mut errors: Vec<(f64, f64)> = Vec::new();
    for &q in &cfg.q {
        let start = Instant::now();
        report.push(guarded(&name("qfunctions"), Some(q), || {
            Ok(InvariantResult::below(name("qfunctions"), Some(q), qfunction_residual(q)?, 1e-10))
        }));
        let op = prep.q_operator(q);
        report.push(guarded(&name("nonresonance"), Some(q), || {
            let nr = check_nonresonance(op.as_ref().map_err(|e| e.clone())?)?;
            let detail = nr.witness.map(|(j, k, n)| format!("t_{j}/t_{k} = q^{n}")).unwrap_or_default();
            Ok(InvariantResult::flag(name("nonresonance"), Some(q), nr.passed, detail))
        }));
        report.push(guarded(&name("gauge"), Some(q), || {
            let op = op.as_ref().map_err(|e| e.clone())?;
            let gauge = formal_gauge(op, t.gauge_order)?;
            let g = op.formal_g(t.gauge_order + 8 * op.order() as i32 + 8)?;
            Ok(InvariantResult::below(name("gauge"), Some(q), gauge.residual(&g), t.gauge))
        }));
        let fund = prep.q_fundamental(q);
        report.push(guarded(&name("residual-q"), Some(q), || {
            let f = fund.as_ref().map_err(|e| e.clone())?;
            let g = grid.clone()?;
            let worst = g
                .par_iter()
                .map(|z| q_residual(f, z))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(InvariantResult::below(name("residual-q"), Some(q), worst, t.residual_q))
        }));
        report.push(guarded(&name("identity"), Some(q), || {
            let f = fund.as_ref().map_err(|e| e.clone())?;
            let m = f.order();
            let mut worst: f64 = 0.0;
            for z in subset(&grid.clone()?) {
                for n in IDENTITY_DEPTHS {
                    for k in 1..m {
                        for j in 0..k {
                            worst = worst.max(finite_n_identity_residual(f, j, k, &z, n)?);
                        }
                    }
                }
            }
            Ok(InvariantResult::below(name("identity"), Some(q), worst, t.identity))
        }));
        let pure = fund
            .as_ref()
            .map_err(|e| e.clone())
            .and_then(|f| prep.sample_q_mode(f, &grid.clone()?, ConnectionMode::Pure));
        report.push(guarded(&name("triangular"), Some(q), || {
            let vals = pure.as_ref().map_err(|e| e.clone())?;
            let ok = vals.iter().all(|u| {
                (0..u.len()).all(|j| u[j][j] != C64::new(0.0, 0.0) && (0..j).all(|k| u[j][k] == C64::new(0.0, 0.0)))
            });
            Ok(InvariantResult::flag(name("triangular"), Some(q), ok, ""))
        }));
        report.push(guarded(&name("boundedness"), Some(q), || {
            let f = fund.as_ref().map_err(|e| e.clone())?;
            let mut bound: f64 = 0.0;
            let mut monotone = true;
            for z in grid.clone()? {
                let b = boundedness_sample(f, &z, BOUNDEDNESS_DEPTH)?;
                bound = b.bound.iter().copied().fold(bound, f64::max);
                monotone &= b.monotone;
            }
            let ok = bound.is_finite() && monotone;
            Ok(InvariantResult::flag(
                name("boundedness"),
                Some(q),
                ok,
                format!("sup |rho| = {bound:.6e}, monotone = {monotone}"),
            )
            .with_value(bound))
        }));
        report.push(guarded(&name("with-constants"), Some(q), || {
            let f = fund.as_ref().map_err(|e| e.clone())?;
            let g = grid.clone()?;
            let vals = prep.sample_q_mode(f, &g, ConnectionMode::WithConstants)?;
            let base = pure.as_ref().map_err(|e| e.clone())?;
            let gauge = formal_gauge(f.diagonal().operator(), t.gauge_order)?;
            let mut diffmax: f64 = 0.0;
            let mut worst: f64 = 0.0;
            for (i, z) in g.iter().enumerate() {
                for (a, b) in vals[i].iter().flatten().zip(base[i].iter().flatten()) {
                    diffmax = diffmax.max((a - b).norm());
                }
                let c = connection_matrix(f, &gauge, z, t.connection_depth, t.connection)?;
                worst = worst.max(q_residual(&f.clone().with_constants(c), z)?);
            }
            Ok(InvariantResult::below(name("with-constants"), Some(q), worst, t.residual_q)
                .with_detail(format!("max |U_pure - U_const| = {diffmax:.6e}")))
        }));
        if let (Ok(v), Ok((_, d)), Ok(g)) = (&pure, &diff, &grid) {
            if let Ok(row) = confluence_error(q, v, d, g) {
                errors.push((q, row.error));
                report.confluence.push(row);
            }
        }
        report.time(&format!("{label}/q={q}"), start);
    }
    if errors.len() >= 2 {
        let mut sorted = errors.clone();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let ok = sorted.windows(2).all(|w| w[1].1 < w[0].1);
        let detail = sorted.iter().map(|(q, e)| format!("E({q}) = {e:.3e}")).collect::<Vec<_>>().join(", ");
        report.push(InvariantResult::flag(name("confluence-decreasing"), None, ok, detail));
    }
    Ok(report)
}

/// Run the suite on the given configuration, or on every built-in example.
pub fn verify(cfg: Option<&ExperimentConfig>, cli: &CliOverrides, out: Option<&Path>) -> Result<Outcome> {
    let configs = match cfg {
        Some(c) => vec![c.clone()],
        None => registry::NAMES
            .iter()
            .map(|n| {
                let mut c = builtin_config(n, &DEFAULT_SUITE_Q)?;
                cli.apply(&mut c)?;
                Ok(c)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut report = RunReport::new("verify", cfg);
    for c in &configs {
        let r = verify_one(c)?;
        report.passed &= r.passed;
        report.invariants.extend(r.invariants);
        report.confluence.extend(r.confluence);
        report.timing.extend(r.timing);
    }
    let mut text = String::new();
    for r in &report.invariants {
        let q = r.q.map(|q| format!(" q={q}")).unwrap_or_default();
        let _ = writeln!(
            text,
            "{} {}{q}: {:.3e} (threshold {:.1e}) {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.threshold,
            r.detail
        );
    }
    let _ = writeln!(text, "{}", if report.passed { "all invariants passed" } else { "some invariants failed" });
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output.as_ref().map(PathBuf::from)))
        .unwrap_or_else(|| PathBuf::from("out"));
    write_file(&dir, "report.json", &report.to_json())?;
    Ok(Outcome { report, text })
}
