//! Minimal SVG rendering for trajectories, response curves, and value-space
//! heatmaps. CSV is the canonical output; these plots are derivative views
//! so every pipeline stays headless.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;

const SERIES_COLORS: [&str; 6] = [
    "#08306b", "#2171b5", "#6baed6", "#d94801", "#a63603", "#238b45",
];

/// One named line on a chart.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Renders labeled line series with axes and a zero line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let mut xs_min = f64::INFINITY;
    let mut xs_max = f64::NEG_INFINITY;
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for s in series {
        for &x in s.x {
            xs_min = xs_min.min(x);
            xs_max = xs_max.max(x);
        }
        for &y in s.y {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    if !xs_min.is_finite() {
        xs_min = 0.0;
        xs_max = 1.0;
    }
    if !ys_min.is_finite() {
        ys_min = 0.0;
        ys_max = 1.0;
    }
    ys_min = ys_min.min(0.0);
    ys_max = ys_max.max(0.0);
    if ys_max - ys_min < 1e-300 {
        ys_max = ys_min + 1.0;
    }
    if xs_max - xs_min < 1e-300 {
        xs_max = xs_min + 1.0;
    }
    let pad = 0.05 * (ys_max - ys_min);
    ys_min -= pad;
    ys_max += pad;

    let px = |x: f64| MARGIN_L + (x - xs_min) / (xs_max - xs_min) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| {
        HEIGHT - MARGIN_B - (y - ys_min) / (ys_max - ys_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = svg_open();
    chart_frame(
        &mut svg, title, x_label, y_label, xs_min, xs_max, ys_min, ys_max, &px, &py,
    );

    // Zero line.
    let zy = py(0.0);
    let _ = writeln!(
        svg,
        "<line x1='{:.2}' y1='{zy:.2}' x2='{:.2}' y2='{zy:.2}' stroke='#999999' stroke-dasharray='4 4'/>",
        px(xs_min),
        px(xs_max)
    );

    for (i, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut points = String::new();
        for (x, y) in s.x.iter().zip(s.y) {
            let _ = write!(points, "{:.2},{:.2} ", px(*x), py(*y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill='none' stroke='{color}' stroke-width='1.4' points='{}'/>",
            points.trim_end()
        );
        let lx = WIDTH - MARGIN_R - 150.0;
        let ly = MARGIN_T + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            "<line x1='{lx:.0}' y1='{ly:.0}' x2='{:.0}' y2='{ly:.0}' stroke='{color}' stroke-width='2'/>\
             <text x='{:.0}' y='{:.0}' font-size='11' fill='#333333'>{}</text>",
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders a value-space map as a grayscale grid: 0 is black, 1 is light.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    x_values: &[f64],
    y_values: &[f64],
    normalized: &[Option<f64>],
) -> String {
    let nx = x_values.len();
    let ny = y_values.len();
    let mut svg = svg_open();
    let _ = writeln!(
        svg,
        "<text x='{:.0}' y='20' font-size='14' text-anchor='middle' fill='#111111'>{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let cw = plot_w / nx as f64;
    let ch = plot_h / ny as f64;
    for (iy, _) in y_values.iter().enumerate() {
        for (ix, _) in x_values.iter().enumerate() {
            let v = normalized[iy * nx + ix];
            let fill = match v {
                // 0 → black, 1 → light.
                Some(v) => {
                    let level = (20.0 + 225.0 * v.clamp(0.0, 1.0)) as u8;
                    format!("rgb({level},{level},{level})")
                }
                None => "rgb(200,40,40)".to_string(),
            };
            // Row 0 is the lowest y value, drawn at the bottom.
            let x0 = MARGIN_L + ix as f64 * cw;
            let y0 = HEIGHT - MARGIN_B - (iy as f64 + 1.0) * ch;
            let _ = writeln!(
                svg,
                "<rect x='{x0:.2}' y='{y0:.2}' width='{cw:.2}' height='{ch:.2}' fill='{fill}'/>"
            );
        }
    }
    axis_labels(
        &mut svg,
        x_label,
        y_label,
        *x_values.first().unwrap_or(&0.0),
        *x_values.last().unwrap_or(&1.0),
        *y_values.first().unwrap_or(&0.0),
        *y_values.last().unwrap_or(&1.0),
    );
    svg.push_str("</svg>\n");
    svg
}

fn svg_open() -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{WIDTH}' height='{HEIGHT}' \
         viewBox='0 0 {WIDTH} {HEIGHT}'>\n<rect width='100%' height='100%' fill='white'/>\n"
    )
}

#[allow(clippy::too_many_arguments)]
fn chart_frame(
    svg: &mut String,
    title: &str,
    x_label: &str,
    y_label: &str,
    xs_min: f64,
    xs_max: f64,
    ys_min: f64,
    ys_max: f64,
    px: &dyn Fn(f64) -> f64,
    py: &dyn Fn(f64) -> f64,
) {
    let _ = writeln!(
        svg,
        "<text x='{:.0}' y='20' font-size='14' text-anchor='middle' fill='#111111'>{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        "<rect x='{MARGIN_L}' y='{MARGIN_T}' width='{:.2}' height='{:.2}' fill='none' stroke='#555555'/>",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    // Tick labels at the corners plus midpoints.
    for frac in [0.0, 0.5, 1.0] {
        let xv = xs_min + frac * (xs_max - xs_min);
        let yv = ys_min + frac * (ys_max - ys_min);
        let _ = writeln!(
            svg,
            "<text x='{:.1}' y='{:.1}' font-size='10' text-anchor='middle' fill='#333333'>{}</text>",
            px(xv),
            HEIGHT - MARGIN_B + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            svg,
            "<text x='{:.1}' y='{:.1}' font-size='10' text-anchor='end' fill='#333333'>{}</text>",
            MARGIN_L - 6.0,
            py(yv) + 3.0,
            fmt_tick(yv)
        );
    }
    axis_titles(svg, x_label, y_label);
}

fn axis_labels(svg: &mut String, x_label: &str, y_label: &str, x0: f64, x1: f64, y0: f64, y1: f64) {
    for (frac, v) in [(0.0, x0), (1.0, x1)] {
        let x = MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R);
        let _ = writeln!(
            svg,
            "<text x='{x:.1}' y='{:.1}' font-size='10' text-anchor='middle' fill='#333333'>{}</text>",
            HEIGHT - MARGIN_B + 16.0,
            fmt_tick(v)
        );
    }
    for (frac, v) in [(0.0, y0), (1.0, y1)] {
        let y = HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B);
        let _ = writeln!(
            svg,
            "<text x='{:.1}' y='{y:.1}' font-size='10' text-anchor='end' fill='#333333'>{}</text>",
            MARGIN_L - 6.0,
            fmt_tick(v)
        );
    }
    axis_titles(svg, x_label, y_label);
}

fn axis_titles(svg: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        "<text x='{:.0}' y='{:.0}' font-size='12' text-anchor='middle' fill='#111111'>{}</text>",
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x='16' y='{:.0}' font-size='12' text-anchor='middle' fill='#111111' \
         transform='rotate(-90 16 {:.0})'>{}</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
