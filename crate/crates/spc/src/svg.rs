//! Minimal static SVG rendering of a monitored chart: plotted points,
//! center line, control limits, and alarm marks.

use std::fmt::Write as _;

use stein_spc_core::{ChartSpec, Decision};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 280.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 14.0;
const MARGIN_BOTTOM: f64 = 30.0;

pub fn render_chart(spec: &ChartSpec, stats: &[f64]) -> String {
    let (lcl, ucl) = spec.limits();
    let center = spec.center();
    let mut lo = center;
    let mut hi = center;
    for &s in stats {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if let Some(l) = lcl {
        lo = lo.min(l);
    }
    if let Some(u) = ucl {
        hi = hi.max(u);
    }
    let pad = 0.08 * (hi - lo).max(1e-9);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = stats.len().max(1) as f64;
    let x_at = |t: usize| MARGIN_LEFT + plot_w * (t as f64 + 0.5) / n;
    let y_at = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    let mut hline = |v: f64, color: &str, dash: &str, label: &str| {
        let y = y_at(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1"{dash}/>"##,
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            svg,
            r##"<text x="4" y="{:.2}" font-size="11" fill="{color}">{label} {v:.4}</text>"##,
            y + 4.0
        );
    };
    hline(center, "#808080", r#" stroke-dasharray="5,4""#, "CL");
    if let Some(l) = lcl {
        hline(l, "#c04040", "", "LCL");
    }
    if let Some(u) = ucl {
        hline(u, "#c04040", "", "UCL");
    }

    let mut path = String::new();
    for (t, &s) in stats.iter().enumerate() {
        let cmd = if t == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2},{:.2} ", x_at(t), y_at(s));
    }
    let _ = writeln!(
        svg,
        r##"<path d="{path}" fill="none" stroke="#3060b0" stroke-width="1.2"/>"##
    );

    for (t, &s) in stats.iter().enumerate() {
        let alarm = spec.check(s) == Decision::Alarm;
        let (r, fill) = if alarm {
            (3.4, "#d02020")
        } else {
            (2.0, "#3060b0")
        };
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}"/>"##,
            x_at(t),
            y_at(s)
        );
    }

    // x-axis tick labels at roughly ten positions
    let step = (stats.len() / 10).max(1);
    for t in (0..stats.len()).step_by(step) {
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#404040" text-anchor="middle">{}</text>"##,
            x_at(t),
            HEIGHT - 10.0,
            t + 1
        );
    }
    svg.push_str("</svg>\n");
    svg
}
