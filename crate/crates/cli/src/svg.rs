//! Minimal static SVG charts for the explanation artifacts.
//!
//! Output is a pure function of the inputs: coordinates are printed with two
//! decimals and no timestamps or ids are embedded.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const ROW: f64 = 24.0;
const MARGIN_LEFT: f64 = 120.0;
const MARGIN_RIGHT: f64 = 40.0;
const MARGIN_TOP: f64 = 40.0;
const POSITIVE: &str = "#d62728";
const NEGATIVE: &str = "#1f77b4";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

/// Map `[lo, hi]` onto the plot's horizontal extent; a zero-width range maps to the centre.
fn scale(lo: f64, hi: f64) -> impl Fn(f64) -> f64 {
    let span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    move |v| if hi > lo { MARGIN_LEFT + (v - lo) / (hi - lo) * span } else { MARGIN_LEFT + span / 2.0 }
}

/// Horizontal bars from zero, one per `(label, value)`.
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let lo = bars.iter().map(|b| b.1).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let x = scale(lo, if hi > lo { hi } else { lo + 1.0 });
    let height = MARGIN_TOP + ROW * bars.len() as f64 + 20.0;
    let mut out = String::new();
    open(&mut out, height, title);
    let zero = x(0.0);
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = MARGIN_TOP + ROW * i as f64;
        let (a, b) = if *v >= 0.0 { (zero, x(*v)) } else { (x(*v), zero) };
        let fill = if *v >= 0.0 { POSITIVE } else { NEGATIVE };
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 6.0, y + 15.0, escape(label));
        let _ = writeln!(out, r#"<rect x="{a:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, y + 4.0, b - a, ROW - 8.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{v:.4}</text>"#, b.max(a) + 4.0, y + 15.0);
    }
    let _ = writeln!(out, r#"<line x1="{zero:.2}" y1="{MARGIN_TOP:.2}" x2="{zero:.2}" y2="{:.2}" stroke="black"/>"#, height - 20.0);
    out.push_str("</svg>\n");
    out
}

/// Polyline of `(x, y)` points with `y` on a fixed `[0, 1]` axis.
pub fn line_chart(title: &str, x_label: &str, points: &[(f64, f64)]) -> String {
    let height = 320.0;
    let plot_h = height - MARGIN_TOP - 50.0;
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let x = scale(lo, hi);
    let y = |v: f64| MARGIN_TOP + (1.0 - v.clamp(0.0, 1.0)) * plot_h;
    let mut out = String::new();
    open(&mut out, height, title);
    let bottom = y(0.0);
    let _ = writeln!(out, r#"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{:.2}" y2="{bottom:.2}" stroke="black"/>"#, WIDTH - MARGIN_RIGHT);
    let _ = writeln!(out, r#"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{bottom:.2}" stroke="black"/>"#);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.2}</text>"#, MARGIN_LEFT - 6.0, y(t) + 4.0);
    }
    let coords: Vec<String> = points.iter().map(|&(a, b)| format!("{:.2},{:.2}", x(a), y(b))).collect();
    let _ = writeln!(out, r#"<polyline fill="none" stroke="{NEGATIVE}" stroke-width="2" points="{}"/>"#, coords.join(" "));
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        let _ = writeln!(out, r#"<text x="{MARGIN_LEFT:.2}" y="{:.2}">{}</text>"#, bottom + 16.0, first.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, WIDTH - MARGIN_RIGHT, bottom + 16.0, last.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, height - 12.0, escape(x_label));
    out.push_str("</svg>\n");
    out
}

/// Floating bars from `start` to `end` per `(label, start, end)`; red for
/// increases, blue for decreases.
pub fn waterfall_chart(title: &str, steps: &[(String, f64, f64)]) -> String {
    let lo = steps.iter().flat_map(|s| [s.1, s.2]).fold(f64::INFINITY, f64::min);
    let hi = steps.iter().flat_map(|s| [s.1, s.2]).fold(f64::NEG_INFINITY, f64::max);
    let x = scale(lo, hi);
    let height = MARGIN_TOP + ROW * steps.len() as f64 + 20.0;
    let mut out = String::new();
    open(&mut out, height, title);
    for (i, (label, start, end)) in steps.iter().enumerate() {
        let y = MARGIN_TOP + ROW * i as f64;
        let (a, b) = (x(start.min(*end)), x(start.max(*end)));
        let fill = if end >= start { POSITIVE } else { NEGATIVE };
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 6.0, y + 15.0, escape(label));
        let _ = writeln!(out, r#"<rect x="{a:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, y + 4.0, (b - a).max(1.0), ROW - 8.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{:+.4}</text>"#, b + 4.0, y + 15.0, end - start);
    }
    out.push_str("</svg>\n");
    out
}
