//! Deterministic SVG rendering: fixed canvas, fixed number formatting, no
//! timestamps, so identical input gives byte-identical output.

use std::fmt::Write as _;
use std::path::Path;

use latdisp::decay::{fit_exponents, DecaySample, SupMethod};
use serde_json::Value;

use crate::error::CliError;

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Decay,
    Polygon,
    TrajectoryNorm,
}

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse { path: path.display().to_string(), message: msg.to_string() }
}

pub fn render(path: &Path, kind: PlotKind) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    match kind {
        PlotKind::Decay => decay_svg(path, &text),
        PlotKind::Polygon => polygon_svg(path, &text),
        PlotKind::TrajectoryNorm => norm_svg(path, &text),
    }
}

/// Columns of a CSV with header, by name; errors name the offending line.
fn read_columns(path: &Path, text: &str, names: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| parse_err(path, e))?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers.iter().position(|h| h == *n).ok_or_else(|| parse_err(path, format!("line 1: missing column {n:?}")))
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("line {line}: {:?} is not a number ({})", field, names[c])))?;
            cols[c].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(parse_err(path, "no data rows"));
    }
    Ok(cols)
}

fn f(x: f64) -> String {
    format!("{x:.2}")
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let lo = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(lo(xs), hi(xs));
        let (y0, y1) = pad(lo(ys), hi(ys));
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        M + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }

    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn frame(s: &mut String, ax: &Axes, xlabel: &str, ylabel: &str) {
    writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    )
    .unwrap();
    for (v, anchor_x) in [(ax.x0, M), (ax.x1, W - M)] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            f(anchor_x),
            f(H - M + 14.0),
            tick(v)
        )
        .unwrap();
    }
    for (v, anchor_y) in [(ax.y0, H - M), (ax.y1, M)] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            f(M - 4.0),
            f(anchor_y + 3.0),
            tick(v)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(xlabel)
    )
    .unwrap();
    writeln!(s, r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, H / 2.0, H / 2.0, escape(ylabel)).unwrap();
}

fn tick(v: f64) -> String {
    format!("{v:.3}")
}

fn polyline(s: &mut String, ax: &Axes, xs: &[f64], ys: &[f64], color: &str, dash: bool) {
    let pts: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{},{}", f(ax.px(x)), f(ax.py(y)))).collect();
    let d = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{d}/>"#, pts.join(" "))
        .unwrap();
}

fn legend(s: &mut String, row: usize, color: &str, label: &str) {
    let y = M + 16.0 + 16.0 * row as f64;
    writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
        f(W - M - 150.0),
        f(y - 4.0),
        f(W - M - 130.0),
        f(y - 4.0)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
        f(W - M - 125.0),
        f(y),
        escape(label)
    )
    .unwrap();
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// log sup|G| against log t with the fitted model overlaid.
fn decay_svg(path: &Path, text: &str) -> Result<String, CliError> {
    let cols = read_columns(path, text, &["t", "sup_abs"])?;
    let samples: Vec<DecaySample> = cols[0]
        .iter()
        .zip(&cols[1])
        .map(|(&t, &v)| DecaySample { t, sup_abs: v, argmax_x: Vec::new(), method: SupMethod::FullGrid })
        .collect();
    if samples.iter().any(|s| s.t <= 0.0 || s.sup_abs <= 0.0) {
        return Err(parse_err(path, "log-log plot needs positive t and sup_abs"));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.t.log10()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.sup_abs.log10()).collect();
    let ax = Axes::fit(&xs, &ys);
    let mut s = open("sup |G(·,t)|");
    frame(&mut s, &ax, "log10 t", "log10 sup|G|");
    polyline(&mut s, &ax, &xs, &ys, "#1f4e9c", false);
    for (&x, &y) in xs.iter().zip(&ys) {
        writeln!(s, r##"<circle cx="{}" cy="{}" r="3" fill="#1f4e9c"/>"##, f(ax.px(x)), f(ax.py(y))).unwrap();
    }
    legend(&mut s, 0, "#1f4e9c", "samples");
    if let Ok(fit) = fit_exponents(&samples) {
        let model: Vec<f64> = samples
            .iter()
            .map(|p| {
                (fit.c_hat.ln() - fit.beta_hat * (1.0 + p.t).ln() + fit.p_hat as f64 * (2.0 + p.t).ln().ln())
                    / std::f64::consts::LN_10
            })
            .collect();
        polyline(&mut s, &ax, &xs, &model, "#c0392b", true);
        legend(&mut s, 1, "#c0392b", &format!("fit β={:.4} p={}", fit.beta_hat, fit.p_hat));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn as_point(v: &Value) -> Option<(f64, f64)> {
    let a = v.as_array()?;
    Some((a.first()?.as_f64()?, a.get(1)?.as_f64()?))
}

/// Support lattice, boundary of the polygon, diagonal and highlighted principal face.
fn polygon_svg(path: &Path, text: &str) -> Result<String, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(path, format!("line {}: {e}", e.line())))?;
    let poly = v.get("polygon").unwrap_or(&v);
    let missing = |k: &str| parse_err(path, format!("missing or malformed field {k:?}"));
    let support: Vec<(f64, f64)> = poly
        .get("support")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("support"))?
        .iter()
        .map(as_point)
        .collect::<Option<_>>()
        .ok_or_else(|| missing("support"))?;
    let vertices: Vec<(f64, f64)> = poly
        .get("vertices")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("vertices"))?
        .iter()
        .map(as_point)
        .collect::<Option<_>>()
        .ok_or_else(|| missing("vertices"))?;
    let distance = poly.get("distance").and_then(Value::as_str).ok_or_else(|| missing("distance"))?;
    let dval = parse_rational(distance).ok_or_else(|| missing("distance"))?;
    let face = poly.get("principal_face").ok_or_else(|| missing("principal_face"))?;

    let extent = support.iter().chain(&vertices).fold(2.0f64, |m, p| m.max(p.0).max(p.1)) + 1.0;
    let ax = Axes { x0: 0.0, x1: extent, y0: 0.0, y1: extent };
    let mut s = open(&format!("Newton polygon, distance {distance}"));
    frame(&mut s, &ax, "i", "j");
    for k in 0..=(extent as i64) {
        let k = k as f64;
        writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/>"##,
            f(ax.px(k)),
            f(ax.py(0.0)),
            f(ax.px(k)),
            f(ax.py(extent))
        )
        .unwrap();
        writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/>"##,
            f(ax.px(0.0)),
            f(ax.py(k)),
            f(ax.px(extent)),
            f(ax.py(k))
        )
        .unwrap();
    }
    // boundary: ray up from the first vertex, the chain, ray right from the last
    if let (Some(first), Some(last)) = (vertices.first(), vertices.last()) {
        let mut xs = vec![first.0];
        let mut ys = vec![extent];
        for p in &vertices {
            xs.push(p.0);
            ys.push(p.1);
        }
        xs.push(extent);
        ys.push(last.1);
        let pts: Vec<String> = xs.iter().zip(&ys).map(|(&x, &y)| format!("{},{}", f(ax.px(x)), f(ax.py(y)))).collect();
        let mut region = pts.clone();
        region.push(format!("{},{}", f(ax.px(extent)), f(ax.py(extent))));
        writeln!(s, r##"<polygon points="{}" fill="#e8eef8" stroke="none"/>"##, region.join(" ")).unwrap();
        writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##, pts.join(" "))
            .unwrap();
    }
    writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#888888" stroke-dasharray="4 4"/>"##,
        f(ax.px(0.0)),
        f(ax.py(0.0)),
        f(ax.px(extent)),
        f(ax.py(extent))
    )
    .unwrap();
    highlight_face(&mut s, &ax, face, extent);
    for p in &support {
        writeln!(s, r#"<circle cx="{}" cy="{}" r="4" fill="black"/>"#, f(ax.px(p.0)), f(ax.py(p.1))).unwrap();
    }
    writeln!(
        s,
        r##"<circle cx="{}" cy="{}" r="5" fill="none" stroke="#c0392b" stroke-width="2"/>"##,
        f(ax.px(dval)),
        f(ax.py(dval))
    )
    .unwrap();
    legend(&mut s, 0, "#1f4e9c", "boundary");
    legend(&mut s, 1, "#c0392b", "principal face");
    s.push_str("</svg>\n");
    Ok(s)
}

fn highlight_face(s: &mut String, ax: &Axes, face: &Value, extent: f64) {
    let red = "#c0392b";
    let kind = face.get("kind").and_then(Value::as_str).unwrap_or("");
    let edge = face.get("edge");
    match kind {
        "vertex" => {
            if let Some(p) = face.get("point").and_then(as_point) {
                writeln!(s, r#"<circle cx="{}" cy="{}" r="7" fill="{red}"/>"#, f(ax.px(p.0)), f(ax.py(p.1))).unwrap();
            }
        }
        _ => {
            let Some(e) = edge else { return };
            let from = e.get("from").and_then(as_point);
            let (a, b) = match (from, e.get("to").and_then(as_point), e.get("direction").and_then(Value::as_str)) {
                (Some(a), Some(b), _) => (a, b),
                (Some(a), None, Some("up")) => (a, (a.0, extent)),
                (Some(a), None, Some("right")) => (a, (extent, a.1)),
                _ => return,
            };
            writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{red}" stroke-width="4"/>"#,
                f(ax.px(a.0)),
                f(ax.py(a.1)),
                f(ax.px(b.0)),
                f(ax.py(b.1))
            )
            .unwrap();
        }
    }
}

pub fn parse_rational(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((n, d)) => Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?),
        None => s.trim().parse().ok(),
    }
}

/// ℓ² and ℓ^∞ norms of a solution against time, log scale.
fn norm_svg(path: &Path, text: &str) -> Result<String, CliError> {
    let cols = read_columns(path, text, &["t", "l2", "linf"])?;
    let floor = 1e-300;
    let l2: Vec<f64> = cols[1].iter().map(|v| v.max(floor).log10()).collect();
    let li: Vec<f64> = cols[2].iter().map(|v| v.max(floor).log10()).collect();
    let all: Vec<f64> = l2.iter().chain(&li).cloned().collect();
    let ax = Axes::fit(&cols[0].iter().chain(&cols[0]).cloned().collect::<Vec<_>>(), &all);
    let mut s = open("solution norms");
    frame(&mut s, &ax, "t", "log10 norm");
    polyline(&mut s, &ax, &cols[0], &l2, "#1f4e9c", false);
    polyline(&mut s, &ax, &cols[0], &li, "#c0392b", false);
    legend(&mut s, 0, "#1f4e9c", "ℓ²");
    legend(&mut s, 1, "#c0392b", "ℓ^∞");
    s.push_str("</svg>\n");
    Ok(s)
}
