//! Self-contained static SVG plots: a heatmap for duration sweeps and a
//! line chart for comparisons and traces. No external assets, no
//! timestamps; output bytes depend only on the data.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Five-stop blue-to-yellow colour scale.
fn colour(t: f64) -> String {
    let stops = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let f = t - i as f64;
    let (r0, g0, b0) = stops[i];
    let (r1, g1, b1) = stops[i + 1];
    format!(
        "rgb({},{},{})",
        (r0 + f * (r1 - r0)).round() as u8,
        (g0 + f * (g1 - g0)).round() as u8,
        (b0 + f * (b1 - b0)).round() as u8
    )
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
}

fn axis_labels(out: &mut String, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{xlabel}</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.1})">{ylabel}</text>"#,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0
    );
}

/// Heatmap over a rectangular grid. `values[r][c]` maps row r (y axis) and
/// column c (x axis); the colour scale is annotated in the value units.
pub fn heatmap(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x_ticks: &[f64],
    y_ticks: &[f64],
    values: &[Vec<f64>],
    unit: &str,
) -> String {
    let mut out = String::new();
    svg_open(&mut out, title);
    axis_labels(&mut out, xlabel, ylabel);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let rows = values.len();
    let cols = x_ticks.len();
    let finite: Vec<f64> = values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);

    let cell_w = plot_w / cols as f64;
    let cell_h = plot_h / rows as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let x = MARGIN_LEFT + c as f64 * cell_w;
            // Row 0 at the bottom.
            let y = MARGIN_TOP + plot_h - (r + 1) as f64 * cell_h;
            let fill = if v.is_finite() {
                colour((v - lo) / span)
            } else {
                "rgb(220,220,220)".to_string()
            };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                fmt(x),
                fmt(y),
                fmt(cell_w + 0.5),
                fmt(cell_h + 0.5)
            );
        }
    }

    for (c, tick) in x_ticks.iter().enumerate() {
        let x = MARGIN_LEFT + (c as f64 + 0.5) * cell_w;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt(x),
            MARGIN_TOP + plot_h + 18.0,
            tick
        );
    }
    for (r, tick) in y_ticks.iter().enumerate() {
        let y = MARGIN_TOP + plot_h - (r as f64 + 0.5) * cell_h;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            fmt(y + 4.0),
            tick
        );
    }

    // Colour bar with value annotations.
    let bar_x = WIDTH - MARGIN_RIGHT + 25.0;
    let steps = 48;
    for s in 0..steps {
        let t = s as f64 / (steps - 1) as f64;
        let y = MARGIN_TOP + plot_h * (1.0 - t);
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="18" height="{}" fill="{}"/>"#,
            fmt(bar_x),
            fmt(y - plot_h / steps as f64),
            fmt(plot_h / steps as f64 + 0.5),
            colour(t)
        );
    }
    for (t, v) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let y = MARGIN_TOP + plot_h * (1.0 - t);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{:.2} {unit}</text>"#,
            fmt(bar_x + 24.0),
            fmt(y + 4.0),
            v
        );
    }

    out.push_str("</svg>\n");
    out
}

/// One line-chart series with optional symmetric error bars.
pub struct Series<'a> {
    pub name: &'a str,
    pub colour: &'a str,
    pub points: Vec<(f64, f64)>,
    pub errors: Option<Vec<f64>>,
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>]) -> String {
    let mut out = String::new();
    svg_open(&mut out, title);
    axis_labels(&mut out, xlabel, ylabel);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let all: Vec<(f64, f64, f64)> = series
        .iter()
        .flat_map(|s| {
            let errs = s
                .errors
                .clone()
                .unwrap_or_else(|| vec![0.0; s.points.len()]);
            s.points
                .iter()
                .zip(errs)
                .map(|(&(x, y), e)| (x, y, e))
                .collect::<Vec<_>>()
        })
        .collect();
    let x_lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = all
        .iter()
        .map(|p| p.1 - p.2)
        .fold(f64::INFINITY, f64::min);
    let y_hi = all
        .iter()
        .map(|p| p.1 + p.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let x_span = (x_hi - x_lo).max(1e-12);
    let pad = 0.05 * (y_hi - y_lo).max(1e-12);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let y_span = y_hi - y_lo;

    let to_px = |x: f64, y: f64| {
        (
            MARGIN_LEFT + (x - x_lo) / x_span * plot_w,
            MARGIN_TOP + (1.0 - (y - y_lo) / y_span) * plot_h,
        )
    };

    // Frame and ticks.
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(MARGIN_LEFT),
        fmt(MARGIN_TOP),
        fmt(plot_w),
        fmt(plot_h)
    );
    for i in 0..=5 {
        let xv = x_lo + x_span * i as f64 / 5.0;
        let (px, _) = to_px(xv, y_lo);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.2}</text>"#,
            fmt(px),
            MARGIN_TOP + plot_h + 18.0,
            xv
        );
        let yv = y_lo + y_span * i as f64 / 5.0;
        let (_, py) = to_px(x_lo, yv);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{:.2}</text>"#,
            MARGIN_LEFT - 8.0,
            fmt(py + 4.0),
            yv
        );
    }

    for (k, s) in series.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", fmt(px), fmt(py))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"/>"#,
            path.join(" "),
            s.colour
        );
        if let Some(errors) = &s.errors {
            for (&(x, y), &e) in s.points.iter().zip(errors) {
                if e <= 0.0 {
                    continue;
                }
                let (px, py_hi) = to_px(x, y + e);
                let (_, py_lo) = to_px(x, y - e);
                let _ = writeln!(
                    out,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}" stroke-width="1"/>"#,
                    fmt(px),
                    fmt(py_hi),
                    fmt(py_lo),
                    s.colour
                );
            }
        }
        // Legend entry.
        let ly = MARGIN_TOP + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{3}" stroke-width="2"/>"#,
            fmt(WIDTH - MARGIN_RIGHT + 12.0),
            fmt(ly),
            fmt(WIDTH - MARGIN_RIGHT + 34.0),
            s.colour
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            fmt(WIDTH - MARGIN_RIGHT + 38.0),
            fmt(ly + 4.0),
            s.name
        );
    }

    out.push_str("</svg>\n");
    out
}
