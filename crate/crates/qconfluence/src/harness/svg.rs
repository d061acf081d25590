//! Static SVG plots. Each plot is rendered from CSV text only.

use crate::error::{Error, Result};
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn parse_rows(csv: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidParameter(format!("CSV has no column '{name}'")))
}

fn num(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("not a number in CSV: '{s}'")))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x;
        PAD + (x - a) / (b - a).max(1e-300) * (W - 2.0 * PAD)
    }
    fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y;
        H - PAD - (y - a) / (b - a).max(1e-300) * (H - 2.0 * PAD)
    }
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in v.filter(|x| x.is_finite()) {
        a = a.min(x);
        b = b.max(x);
    }
    if !a.is_finite() {
        return (0.0, 1.0);
    }
    if a == b {
        (a - 0.5, b + 0.5)
    } else {
        (a, b)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, anchor) in [(f.x.0, "start"), (f.x.1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#,
            f.px(v),
            H - PAD + 16.0
        );
    }
    for v in [f.y.0, f.y.1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, PAD - 4.0, f.py(v) + 4.0);
    }
    s
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, label: &str, slot: usize) {
    let p: Vec<String> = pts
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, p.join(" "));
    for q in &p {
        let (x, y) = q.split_once(',').unwrap();
        let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
    }
    let ly = PAD + 14.0 + 14.0 * slot as f64;
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{label}</text>"#,
        W - PAD - 6.0
    );
}

/// `log10 E` against `log10(q−1)` from a CSV with columns `q,error`.
pub fn error_vs_q(csv: &str) -> Result<String> {
    let (h, rows) = parse_rows(csv)?;
    let (cq, ce) = (column(&h, "q")?, column(&h, "error")?);
    let mut pts = Vec::new();
    for r in &rows {
        let q = num(&r[cq])?;
        let e = num(&r[ce])?;
        pts.push(((q - 1.0).log10(), e.max(1e-300).log10()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f = Frame {
        x: span(pts.iter().map(|p| p.0)),
        y: span(pts.iter().map(|p| p.1)),
    };
    let mut s = open("confluence error E(q)", "log10(q − 1)", "log10 E", &f);
    polyline(&mut s, &f, &pts, COLORS[0], "E(q)", 0);
    s.push_str("</svg>\n");
    Ok(s)
}

/// `log10|u_{j,k}|` against `|z|` along the first sampled argument, one
/// curve per entry and flavor/q, from a solution-sample CSV.
pub fn ray_profile(csv: &str) -> Result<String> {
    let (h, rows) = parse_rows(csv)?;
    let (cre, cim, carg) = (column(&h, "re_z")?, column(&h, "im_z")?, column(&h, "arg_z")?);
    let (cj, ck, cur, cui) = (column(&h, "j")?, column(&h, "k")?, column(&h, "re_u")?, column(&h, "im_u")?);
    let (cf, cq) = (column(&h, "flavor")?, column(&h, "q")?);
    let arg0 = rows
        .first()
        .map(|r| num(&r[carg]))
        .transpose()?
        .ok_or_else(|| Error::InvalidParameter("no samples".into()))?;
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &rows {
        if (num(&r[carg])? - arg0).abs() > 1e-12 {
            continue;
        }
        let label = if r[cf] == "q" {
            format!("u{}{} q={}", r[cj], r[ck], num(&r[cq])?)
        } else {
            format!("ũ{}{}", r[cj], r[ck])
        };
        let modz = num(&r[cre])?.hypot(num(&r[cim])?);
        let u = num(&r[cur])?.hypot(num(&r[cui])?);
        let pt = (modz, u.max(1e-300).log10());
        match curves.iter_mut().find(|c| c.0 == label) {
            Some(c) => c.1.push(pt),
            None => curves.push((label, vec![pt])),
        }
    }
    for c in &mut curves {
        c.1.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let f = Frame {
        x: span(curves.iter().flat_map(|c| c.1.iter().map(|p| p.0))),
        y: span(curves.iter().flat_map(|c| c.1.iter().map(|p| p.1))),
    };
    let mut s = open(&format!("|u_jk| along arg z = {arg0:.4}"), "|z|", "log10 |u|", &f);
    for (i, (label, pts)) in curves.iter().enumerate() {
        polyline(&mut s, &f, pts, COLORS[i % COLORS.len()], label, i);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Arc diagram from a CSV with columns `set,start,end` (radians); set
/// `admissible` is drawn innermost.
pub fn arc_diagram(csv: &str) -> Result<String> {
    let (h, rows) = parse_rows(csv)?;
    let (cs, ca, cb) = (column(&h, "set")?, column(&h, "start")?, column(&h, "end")?);
    let mut sets: Vec<String> = Vec::new();
    for r in &rows {
        if !sets.contains(&r[cs]) {
            sets.push(r[cs].clone());
        }
    }
    let (cx, cy) = (W / 2.0, H / 2.0 + 10.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{cx}" y="24" text-anchor="middle" font-size="14">directions</text>"#);
    let _ = writeln!(s, r#"<line x1="{}" y1="{cy}" x2="{}" y2="{cy}" stroke="gray"/>"#, cx - 170.0, cx + 170.0);
    let _ = writeln!(s, r#"<line x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="gray"/>"#, cy - 170.0, cy + 170.0);
    for (i, set) in sets.iter().enumerate() {
        let radius = 60.0 + 30.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="{radius}" fill="none" stroke="lightgray"/>"#);
        for r in rows.iter().filter(|r| &r[cs] == set) {
            let (a, b) = (num(&r[ca])?, num(&r[cb])?);
            let p = |t: f64| (cx + radius * t.cos(), cy - radius * t.sin());
            let (x0, y0) = p(a);
            let (x1, y1) = p(b);
            let large = if b - a > std::f64::consts::PI { 1 } else { 0 };
            let _ = writeln!(
                s,
                r#"<path d="M {x0:.2} {y0:.2} A {radius} {radius} 0 {large} 0 {x1:.2} {y1:.2}" fill="none" stroke="{color}" stroke-width="5"/>"#
            );
        }
        let _ = writeln!(s, r#"<text x="16" y="{}" fill="{color}">{set}</text>"#, 44.0 + 16.0 * i as f64);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
