//! Minimal standalone SVG line charts with a log-scale y axis.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Nonpositive values are drawn at this floor.
const FLOOR: f64 = 1e-16;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of `y` (log10 scale) against `x`.
pub fn log_line_chart(title: &str, x_label: &str, x: &[f64], y: &[f64]) -> String {
    let ly: Vec<f64> = y.iter().map(|v| v.max(FLOOR).log10()).collect();
    let (x0, x1) = range(x);
    let (y0, y1) = {
        let (lo, hi) = range(&ly);
        (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
    };
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{bx} {TOP} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#,
        W - RIGHT
    );
    for k in 0..=4 {
        let v = x0 + (x1 - x0) * k as f64 / 4.0;
        let p = px(v);
        let _ = writeln!(s, r#"<line x1="{p:.1}" y1="{by}" x2="{p:.1}" y2="{}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{p:.1}" y="{}" text-anchor="middle">{}</text>"#,
            by + 18.0,
            tick_label(v)
        );
    }
    let mut e = y0;
    while e <= y1 + 0.5 {
        let p = py(e);
        let _ = writeln!(s, r#"<line x1="{}" y1="{p:.1}" x2="{bx}" y2="{p:.1}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">1e{}</text>"#,
            bx - 8.0,
            p + 4.0,
            e as i64
        );
        e += ((y1 - y0) / 8.0).ceil().max(1.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let pts: Vec<String> = x
        .iter()
        .zip(&ly)
        .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        pts.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let s = log_line_chart("gap <t>", "rounds", &[1.0, 2.0, 3.0], &[1.0, 1e-3, 0.0]);
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains("gap &lt;t&gt;"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert!(!s.contains("NaN") && !s.contains("inf"));
    }

    #[test]
    fn single_point_and_empty() {
        for (x, y) in [(vec![5.0], vec![0.1]), (vec![], vec![])] {
            let s = log_line_chart("t", "x", &x, &y);
            assert!(!s.contains("NaN"), "{s}");
        }
    }
}
