//! Self-contained SVG convergence plots: evaluation count on the x-axis,
//! mean best feasible objective on the y-axis, one polyline per series.
//! The maximum-free variant is drawn black and the classic variant gray,
//! matching the figure convention of the studies this harness reproduces
//! (same for independent = black vs coupled = gray surrogates).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::HarnessError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 52.0;

/// One plotted series; entries are `None` where the mean is undefined.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    pub values: Vec<Option<f64>>,
}

fn series_color(label: &str, index: usize) -> &'static str {
    let l = label.to_lowercase();
    if l.contains("nomax") || l.contains("indep") {
        "#000000"
    } else if l.contains("withmax") || l.contains("lmc") {
        "#888888"
    } else {
        const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        PALETTE[index % PALETTE.len()]
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Write the convergence plot for `series` to `path`.
///
/// Every series must have the same length and at least one defined value.
/// Each polyline carries one vertex per defined entry plus a leading
/// anchor, so a fully defined series over a budget of `n` evaluations has
/// `n + 1` vertices.
pub fn emit_plot(series: &[PlotSeries], path: &Path) -> Result<(), HarnessError> {
    let svg = render_svg(series)?;
    fs::write(path, svg)?;
    Ok(())
}

pub fn render_svg(series: &[PlotSeries]) -> Result<String, HarnessError> {
    if series.is_empty() {
        return Err(HarnessError::Config("no series to plot".into()));
    }
    let len = series[0].values.len();
    if len == 0 || series.iter().any(|s| s.values.len() != len) {
        return Err(HarnessError::Config(
            "series must be non-empty and of equal length".into(),
        ));
    }
    let defined: Vec<f64> = series
        .iter()
        .flat_map(|s| s.values.iter().flatten().copied())
        .collect();
    if defined.is_empty() {
        return Err(HarnessError::Config("series have no defined values".into()));
    }
    let (mut y_lo, mut y_hi) = defined
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    } else {
        let pad = 0.05 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }

    let x_max = len as f64;
    let px = |k: f64| MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * k / x_max;
    let py = |v: f64| HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * (v - y_lo) / (y_hi - y_lo);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black" stroke-width="1"/>"#,
        l = MARGIN_L,
        b = HEIGHT - MARGIN_B,
        r = WIDTH - MARGIN_R
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black" stroke-width="1"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = HEIGHT - MARGIN_B
    );

    // Ticks and labels.
    for i in 0..=5 {
        let k = x_max * i as f64 / 5.0;
        let x = px(k);
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="black" stroke-width="1"/>"#,
            b = HEIGHT - MARGIN_B,
            b2 = HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">{v}</text>"#,
            y = HEIGHT - MARGIN_B + 20.0,
            v = k.round() as i64
        );
        let v = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x1}" y1="{y}" x2="{l}" y2="{y}" stroke="black" stroke-width="1"/>"#,
            x1 = MARGIN_L - 5.0,
            l = MARGIN_L
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{yy}" font-size="12" text-anchor="end">{v:.4}</text>"#,
            x = MARGIN_L - 8.0,
            yy = y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="13" text-anchor="middle">evaluations</text>"#,
        x = (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        y = HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{y}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {y})">best feasible objective</text>"#,
        y = (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    );

    // Series polylines: leading anchor plus one vertex per defined entry.
    for (si, s) in series.iter().enumerate() {
        let color = series_color(&s.label, si);
        let mut points = String::new();
        let mut anchored = false;
        for (i, v) in s.values.iter().enumerate() {
            if let Some(v) = v {
                if !anchored {
                    let _ = write!(points, "{:.3},{:.3} ", px(i as f64), py(*v));
                    anchored = true;
                }
                let _ = write!(points, "{:.3},{:.3} ", px((i + 1) as f64), py(*v));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            points.trim_end()
        );
        // Legend entry.
        let ly = MARGIN_T + 16.0 * si as f64 + 8.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x1}" y1="{ly}" x2="{x2}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x1 = WIDTH - MARGIN_R - 150.0,
            x2 = WIDTH - MARGIN_R - 120.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12">{label}</text>"#,
            x = WIDTH - MARGIN_R - 112.0,
            y = ly + 4.0,
            label = escape_xml(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
