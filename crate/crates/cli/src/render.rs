//! CSV and SVG text.

use std::f64::consts::{FRAC_PI_4, TAU};
use std::fmt::Write;

use ate_lab::experiments::RCurve;

/// Round-trip exact: 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows joined with `,` and terminated by `\n`.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Table::default();
        t.row(header.iter().map(|s| s.to_string()));
        t
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let fields: Vec<String> = fields.into_iter().collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn footer(&mut self, line: &str) {
        self.text.push_str("# ");
        self.text.push_str(line);
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const THETA_LABELS: [&str; 9] = ["0", "π/4", "π/2", "3π/4", "π", "5π/4", "3π/2", "7π/4", "2π"];

/// Line plot of `R(theta, t)` against theta on `[0, 2 pi)`.
pub fn curve_svg(curve: &RCurve, title: &str) -> String {
    let values: Vec<(f64, f64)> = curve
        .thetas
        .iter()
        .zip(&curve.r_values)
        .filter_map(|(&th, r)| r.map(|r| (th, r.value)))
        .collect();
    let lo = values.iter().map(|v| v.1).fold(0.0f64, f64::min);
    let hi = values.iter().map(|v| v.1).fold(1.0f64, f64::max);
    let (lo, hi) = ((lo * 5.0).floor() / 5.0, (hi * 5.0).ceil() / 5.0);
    let x = |th: f64| LEFT + th / TAU * (WIDTH - LEFT - RIGHT);
    let y = |r: f64| HEIGHT - BOTTOM - (r - lo) / (hi - lo) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="500" viewBox="0 0 800 500">"#
    );
    let _ = writeln!(s, r#"<rect width="800" height="500" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}" stroke="black"/>"#
    );
    for (k, label) in THETA_LABELS.iter().enumerate() {
        let tx = x(k as f64 * FRAC_PI_4);
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.1}" y1="{y0:.1}" x2="{tx:.1}" y2="{:.1}" stroke="black"/>"#,
            y0 + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">{label}</text>"#,
            y0 + 20.0
        );
    }
    let steps = ((hi - lo) * 5.0).round() as i64;
    for k in 0..=steps {
        let v = lo + k as f64 / 5.0;
        let ty = y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ty:.1}" x2="{x0:.1}" y2="{ty:.1}" stroke="black"/>"#,
            x0 - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="12">{v:.1}</text>"#,
            x0 - 10.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="13">θ</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    );
    let points: Vec<String> = values
        .iter()
        .map(|&(th, r)| format!("{:.2},{:.2}", x(th), y(r)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        points.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
