//! Learning-curve rendering to a self-contained SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PLOT_WIDTH: f64 = 640.0;
pub const PLOT_HEIGHT: f64 = 400.0;
pub const MOVING_AVERAGE: usize = 20;
const MARGIN: f64 = 50.0;

/// Parsed curve and the number of rows that could not be read.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub skipped: usize,
    pub y_label: String,
}

/// Reads `step` against `y_column` (default: `score` when present, else the
/// second column). Rows with missing or non-finite values are skipped.
pub fn read_curve(csv: &str, y_column: Option<&str>) -> Result<Curve> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = match lines.next() {
        Some(h) => h.split(',').map(str::trim).collect(),
        None => return Ok(Curve::default()),
    };
    let col = |name: &str| header.iter().position(|h| *h == name);
    let xi = col("step").unwrap_or(0);
    let yi = match y_column {
        Some(name) => col(name).ok_or_else(|| Error::InvalidArgument(format!("no column named `{name}`")))?,
        None => col("score").unwrap_or(1.min(header.len().saturating_sub(1))),
    };
    let mut curve = Curve {
        y_label: header.get(yi).unwrap_or(&"").to_string(),
        ..Default::default()
    };
    for line in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| fields.get(i).and_then(|f| f.parse::<f64>().ok()).filter(|v| v.is_finite());
        match (get(xi), get(yi)) {
            (Some(x), Some(y)) => {
                curve.x.push(x);
                curve.y.push(y);
            }
            _ => curve.skipped += 1,
        }
    }
    Ok(curve)
}

/// Trailing mean over at most `window` points.
pub fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(y.len());
    let mut sum = 0.0;
    for i in 0..y.len() {
        sum += y[i];
        if i >= window {
            sum -= y[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn polyline(xs: &[f64], ys: &[f64], sx: (f64, f64), sy: (f64, f64), colour: &str, out: &mut String) {
    if xs.is_empty() {
        return;
    }
    let w = PLOT_WIDTH - 2.0 * MARGIN;
    let h = PLOT_HEIGHT - 2.0 * MARGIN;
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let px = MARGIN + w * (x - sx.0) / (sx.1 - sx.0);
            let py = PLOT_HEIGHT - MARGIN - h * (y - sy.0) / (sy.1 - sy.0);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1" points="{}"/>"#,
        pts.join(" ")
    );
}

/// Raw values in grey with the moving average on top. The output depends
/// only on the curve, so equal inputs give byte-identical files.
pub fn render_svg(curve: &Curve) -> String {
    let (w, h) = (PLOT_WIDTH, PLOT_HEIGHT);
    let sx = range(&curve.x);
    let sy = range(&curve.y);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, h - MARGIN, w - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{:.6}</text>"#, x0, y0 + 16.0, sx.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{:.6}</text>"#,
        x1,
        y0 + 16.0,
        sx.1
    );
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="12">{:.6}</text>"#, y0, sy.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="12">{:.6}</text>"#, y1, sy.1);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14">{}</text>"#, x0, curve.y_label);
    polyline(&curve.x, &curve.y, sx, sy, "#bbbbbb", &mut s);
    polyline(&curve.x, &moving_average(&curve.y, MOVING_AVERAGE), sx, sy, "#1f4e9c", &mut s);
    s.push_str("</svg>\n");
    s
}

/// Renders `input` into `output`; returns the number of skipped rows.
pub fn cmd_plot(input: impl AsRef<Path>, output: impl AsRef<Path>, y_column: Option<&str>) -> Result<usize> {
    let curve = read_curve(&fs::read_to_string(input)?, y_column)?;
    fs::write(output, render_svg(&curve))?;
    Ok(curve.skipped)
}
