//! Minimal log-log SVG plots of experiment tables.

use std::fmt::Write;

use crate::experiments::{group_series, CsvRow};

const W: f64 = 900.0;
const H: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 300.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"];

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, h: f64) -> f64 {
        LEFT + (h.log10() - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }
    fn py(&self, e: f64) -> f64 {
        H - BOTTOM - (e.log10() - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

/// Composite (solid) and improved (dashed) errors against `h`, one colour
/// per series, with reference slopes `k + 1` and `k + 2`.
pub fn rate_plot(title: &str, rows: &[CsvRow], k: usize) -> String {
    let series = group_series(rows);
    let pos = |v: f64| v.is_finite() && v > 0.0;
    let hs: Vec<f64> = rows.iter().map(|r| r.h).filter(|h| pos(*h)).collect();
    let es: Vec<f64> = rows.iter().flat_map(|r| [r.err_composite, r.err_improved]).filter(|e| pos(*e)).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" font-size="15">{}</text>"#, LEFT, escape(title));
    if hs.is_empty() || es.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let ax = Axes {
        x0: (lo(&hs) - 0.1).floor(),
        x1: (hi(&hs) + 0.1).ceil(),
        y0: (lo(&es) - 0.1).floor(),
        y1: (hi(&es) + 0.1).ceil(),
    };

    // frame and decade grid
    let (fx0, fx1, fy0, fy1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{fx0}" y="{fy0}" width="{}" height="{}" fill="none" stroke="black"/>"#, fx1 - fx0, fy1 - fy0);
    for d in ax.x0 as i32..=ax.x1 as i32 {
        let x = ax.px(10f64.powi(d));
        let _ = writeln!(svg, r##"<line x1="{x:.1}" y1="{fy0}" x2="{x:.1}" y2="{fy1}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#, fy1 + 18.0);
    }
    for d in ax.y0 as i32..=ax.y1 as i32 {
        let y = ax.py(10f64.powi(d));
        let _ = writeln!(svg, r##"<line x1="{fx0}" y1="{y:.1}" x2="{fx1}" y2="{y:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#, fx0 - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, (fx0 + fx1) / 2.0, H - 18.0);
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">error</text>"#,
        (fy0 + fy1) / 2.0,
        (fy0 + fy1) / 2.0
    );

    for (i, (key, rows)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for (dash, pick) in [("", 0), (r#" stroke-dasharray="6 4""#, 1)] {
            let pts: Vec<String> = rows
                .iter()
                .map(|r| (r.h, if pick == 0 { r.err_composite } else { r.err_improved }))
                .filter(|(h, e)| pos(*h) && pos(*e))
                .map(|(h, e)| format!("{:.1},{:.1}", ax.px(h), ax.py(e)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.6"{dash}/>"#, pts.join(" "));
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{colour}"/>"#);
            }
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = W - RIGHT + 16.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{colour}" stroke-width="2"/>"#, ly - 4.0, lx + 22.0, ly - 4.0);
        let label = format!("{} ell={} lambda={}", key.family, key.ell, key.lambda_sigma);
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 28.0, escape(&label));
    }
    let ly = TOP + 14.0 + 16.0 * series.len() as f64 + 10.0;
    let _ = writeln!(svg, r#"<text x="{}" y="{ly}">solid: composite, dashed: improved</text>"#, W - RIGHT + 16.0);

    // slope triangles anchored near the lower-left corner
    let h_a = 10f64.powf(ax.x0 + 0.15 * (ax.x1 - ax.x0));
    let h_b = h_a * 10f64.powf(0.25 * (ax.x1 - ax.x0));
    for (j, slope) in [(k + 1) as f64, (k + 2) as f64].into_iter().enumerate() {
        let e_a = 10f64.powf(ax.y0 + (0.12 + 0.08 * j as f64) * (ax.y1 - ax.y0));
        let e_b = e_a * (h_b / h_a).powf(slope);
        if e_b.log10() > ax.y1 {
            continue;
        }
        let (xa, ya, xb, yb) = (ax.px(h_a), ax.py(e_a), ax.px(h_b), ax.py(e_b));
        let _ = writeln!(
            svg,
            r#"<polygon points="{xa:.1},{ya:.1} {xb:.1},{ya:.1} {xb:.1},{yb:.1}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}">{slope}</text>"#, xb + 4.0, (ya + yb) / 2.0);
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
