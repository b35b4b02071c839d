//! Minimal SVG line charts, one stacked panel per metric column.

use std::fmt::Write;

use anyhow::{anyhow, bail, Context, Result};

const WIDTH: f64 = 720.0;
const PANEL: f64 = 180.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_Y: f64 = 30.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn read_series(csv_text: &str, names: &[String]) -> Result<Vec<Series>> {
    if names.is_empty() {
        bail!("no series requested");
    }
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().context("CSV header")?.clone();
    let column = |name: &str| header.iter().position(|h| h == name);
    let x_col = column("iteration");
    let cols = names
        .iter()
        .map(|n| column(n).ok_or_else(|| anyhow!("column {n:?} not in CSV header")))
        .collect::<Result<Vec<_>>>()?;
    let mut series: Vec<Series> = names
        .iter()
        .map(|n| Series {
            name: n.clone(),
            points: Vec::new(),
        })
        .collect();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("CSV row {}", row + 2))?;
        let parse = |i: usize| -> Result<f64> {
            let cell = rec.get(i).unwrap_or("");
            cell.trim()
                .parse()
                .with_context(|| format!("CSV row {}: {cell:?} is not a number", row + 2))
        };
        let x = match x_col {
            Some(i) => parse(i)?,
            None => row as f64,
        };
        for (s, &c) in series.iter_mut().zip(&cols) {
            let y = parse(c)?;
            if y.is_finite() {
                s.points.push((x, y));
            }
        }
    }
    Ok(series)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    match (lo.is_finite(), hi > lo) {
        (false, _) => (0.0, 1.0),
        (true, false) => (lo - 0.5, lo + 0.5),
        (true, true) => (lo, hi),
    }
}

/// Renders the named CSV columns against `iteration` (row index if absent).
pub fn render(csv_text: &str, names: &[String]) -> Result<String> {
    let series = read_series(csv_text, names)?;
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL - 2.0 * MARGIN_Y;
    let height = PANEL * series.len() as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, s) in series.iter().enumerate() {
        let top = k as f64 * PANEL + MARGIN_Y;
        let (y0, y1) = range(s.points.iter().map(|p| p.1));
        let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| top + plot_h - (y - y0) / (y1 - y0) * plot_h;
        let name = escape(&s.name);
        let color = COLORS[k % COLORS.len()];

        let _ = writeln!(out, r#"<g id="panel-{name}">"#);
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN_LEFT}" y="{:.1}" font-weight="bold">{name}</text>"#,
            top - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y1:.4}</text>"#,
            MARGIN_LEFT - 6.0,
            top + 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y0:.4}</text>"#,
            MARGIN_LEFT - 6.0,
            top + plot_h + 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN_LEFT}" y="{:.1}">{x0}</text>"#,
            top + plot_h + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{x1}</text>"#,
            MARGIN_LEFT + plot_w,
            top + plot_h + 16.0
        );
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-series="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{name}</title></polyline>"#,
            points.join(" ")
        );
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
