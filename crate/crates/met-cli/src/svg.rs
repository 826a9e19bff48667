//! Minimal self-contained SVG line plots: autoscaled axes, a handful of
//! ticks, polylines and optional point markers. Enough to eyeball a fit or
//! a tuning curve without pulling in a plotting stack.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub color: &'a str,
    /// Draw circles at the samples instead of only the polyline.
    pub points: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 48.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn line_plot(series: &[Series<'_>], title: &str, x_label: &str, y_label: &str) -> String {
    let (x_lo, x_hi) = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (y_lo, y_hi) = range(series.iter().flat_map(|s| s.y.iter().copied()));
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let sy = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axis frame.
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"#,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    // Ticks and labels.
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let px = sx(fx);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="#444"/>"#,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{}" font-size="11" text-anchor="middle" fill="#222">{fx:.4}</text>"#,
            HEIGHT - MARGIN_B + 18.0
        );
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let py = sy(fy);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#444"/>"#,
            MARGIN_L - 5.0,
            MARGIN_L
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-size="11" text-anchor="end" fill="#222">{fy:.3e}</text>"#,
            MARGIN_L - 8.0,
            py + 4.0
        );
    }

    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" font-size="13" text-anchor="middle" fill="#000">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" fill="#000">{x_label}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" font-size="12" text-anchor="middle" fill="#000" transform="rotate(-90 16 {})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for s in series {
        if s.points {
            for (&x, &y) in s.x.iter().zip(s.y.iter()) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{}"/>"#,
                    sx(x),
                    sy(y),
                    s.color
                );
            }
        } else {
            let mut path = String::new();
            for (i, (&x, &y)) in s.x.iter().zip(s.y.iter()).enumerate() {
                let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
            }
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.6"/>"#,
                path.trim_end(),
                s.color
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
