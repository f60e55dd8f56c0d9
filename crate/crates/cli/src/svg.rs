//! Plain SVG line plots. Output depends only on the data: fixed 800×600 viewport,
//! fixed colour cycle, fixed number formatting.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 9] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"];

pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.03 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Line plot of several series. With `log_y` the y values are plotted as `log₁₀ y`
/// (nonpositive values are dropped).
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let ty = |y: f64| if log_y { if y > 0.0 { y.log10() } else { f64::NAN } } else { y };
    let (x0, x1) = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().map(|&y| ty(y))));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="400" y="28" text-anchor="middle" font-size="16">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (gx, gy) = (px(xv), py(yv));
        let _ = writeln!(s, r#"<line x1="{gx:.2}" y1="{:.2}" x2="{gx:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#, TOP + ph + 20.0);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{gy:.2}" x2="{LEFT:.2}" y2="{gy:.2}" stroke="black"/>"#, LEFT - 5.0);
        let label = if log_y { format!("1e{yv:.2}") } else { format!("{yv:.3}") };
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, gy + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(ylabel)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        // split at non-finite points
        let mut runs: Vec<Vec<(f64, f64)>> = vec![vec![]];
        for (&x, &y) in ser.x.iter().zip(&ser.y) {
            let y = ty(y);
            if x.is_finite() && y.is_finite() {
                runs.last_mut().unwrap().push((px(x), py(y)));
            } else if !runs.last().unwrap().is_empty() {
                runs.push(vec![]);
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let lx = LEFT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Snapshots of `φ(t, ·)` at 9 evenly spaced time indices.
pub fn snapshots(title: &str, x: &[f64], times: &[f64], rows: &[Vec<f64>]) -> String {
    let m = rows.len() - 1;
    let series: Vec<Series> = (0..9)
        .map(|i| {
            let k = (i * m + 4) / 8;
            Series { label: format!("t = {:.3}", times[k]), x: x.to_vec(), y: rows[k].clone() }
        })
        .collect();
    line_plot(title, "x", "φ(t, x)", &series, false)
}
