//! Minimal SVG line plots for quick inspection of preset output.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn bounds(series: &[PlotSeries]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0_f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    (x0, x1, y0, y1)
}

/// One polyline per series with axis extents labelled at the corners.
pub fn line_plot_svg(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="black" points="{m},{t} {m},{b} {r},{b}"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">{x0:.3}</text>"#, MARGIN, H - MARGIN + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#, W - MARGIN, H - MARGIN + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, MARGIN - 4.0, H - MARGIN);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, MARGIN - 4.0, MARGIN + 4.0);
    let _ = writeln!(s, r#"<text x="12" y="{}" transform="rotate(-90 12 {})">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));
    for (k, series) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for &(x, y) in series.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = write!(pts, "{:.1},{:.1} ", px(x), py(y));
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - MARGIN - 100.0,
            MARGIN + 14.0 * k as f64,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let series = vec![
            PlotSeries {
                label: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0)],
            },
            PlotSeries {
                label: "b<c".into(),
                points: vec![(0.0, 0.5), (1.0, f64::NAN)],
            },
        ];
        let svg = line_plot_svg("t", "x", "y", &series);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("b&lt;c"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_input_still_renders() {
        assert!(line_plot_svg("t", "x", "y", &[]).ends_with("</svg>\n"));
    }
}
