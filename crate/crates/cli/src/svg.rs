//! Self-contained SVG line charts for study summaries: one polyline per
//! parameter cell, +/- 1 SE error bars, a legend, and nothing
//! run-dependent — the output is a pure function of the data.

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    /// One standard error; 0 draws no bar.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

#[derive(Debug, PartialEq)]
pub enum PlotError {
    EmptySummary,
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::EmptySummary => f.write_str("cannot plot an empty summary"),
        }
    }
}

impl std::error::Error for PlotError {}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 470.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 382.0;

// Series palette in figure-caption order: yellow, red, green, then spares.
const COLORS: [&str; 6] = [
    "#e6b400", "#cc3311", "#117733", "#4477aa", "#aa3377", "#66ccee",
];

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(0.01..10000.0).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders a line chart of `mean(x)` per series with error bars. At least
/// one point across all series is required.
pub fn emit_svg_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[PlotSeries],
) -> Result<String, PlotError> {
    let all_points: Vec<&PlotPoint> = series.iter().flat_map(|s| s.points.iter()).collect();
    if all_points.is_empty() {
        return Err(PlotError::EmptySummary);
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &all_points {
        x_min = x_min.min(p.x);
        x_max = x_max.max(p.x);
        y_min = y_min.min(p.y - p.se);
        y_max = y_max.max(p.y + p.se);
    }
    if x_min == x_max {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_min == y_max {
        let pad = y_min.abs().max(1.0) * 0.1;
        y_min -= pad;
        y_max += pad;
    }
    let y_pad = (y_max - y_min) * 0.06;
    y_min -= y_pad;
    y_max += y_pad;

    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * (RIGHT - LEFT);
    let sy = |y: f64| BOTTOM - (y - y_min) / (y_max - y_min) * (BOTTOM - TOP);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" width=\"{WIDTH}\" height=\"{HEIGHT}\">\n"
    ));
    out.push_str("<rect x=\"0\" y=\"0\" width=\"640\" height=\"440\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        coord((LEFT + RIGHT) / 2.0),
        esc(title)
    ));

    // Axes.
    out.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = coord(LEFT),
        r = coord(RIGHT),
        t = coord(TOP),
        b = coord(BOTTOM)
    ));

    // X ticks at the distinct data abscissae (grids are small).
    let mut xs: Vec<f64> = all_points.iter().map(|p| p.x).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    for &x in &xs {
        let px = sx(x);
        out.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y2}\" stroke=\"black\"/>\n",
            x1 = coord(px),
            y1 = coord(BOTTOM),
            y2 = coord(BOTTOM + 5.0)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{t}</text>\n",
            x = coord(px),
            y = coord(BOTTOM + 20.0),
            t = fmt_tick(x)
        ));
    }

    // Five y ticks.
    for i in 0..5 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = sy(y);
        out.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y1}\" stroke=\"black\"/>\n",
            x1 = coord(LEFT - 5.0),
            x2 = coord(LEFT),
            y1 = coord(py)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">{t}</text>\n",
            x = coord(LEFT - 9.0),
            y = coord(py + 4.0),
            t = fmt_tick(y)
        ));
    }

    // Axis labels.
    out.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{t}</text>\n",
        x = coord((LEFT + RIGHT) / 2.0),
        y = coord(HEIGHT - 12.0),
        t = esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {yr})\">{t}</text>\n",
        y = coord((TOP + BOTTOM) / 2.0),
        yr = coord((TOP + BOTTOM) / 2.0),
        t = esc(y_label)
    ));

    // Series: error bars under the polyline, then markers.
    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let mut pts: Vec<&PlotPoint> = s.points.iter().collect();
        pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        for p in &pts {
            if p.se > 0.0 {
                let (px, y_lo, y_hi) = (sx(p.x), sy(p.y - p.se), sy(p.y + p.se));
                out.push_str(&format!(
                    "<line x1=\"{x}\" y1=\"{lo}\" x2=\"{x}\" y2=\"{hi}\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
                    x = coord(px),
                    lo = coord(y_lo),
                    hi = coord(y_hi)
                ));
                for y in [y_lo, y_hi] {
                    out.push_str(&format!(
                        "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
                        x1 = coord(px - 3.0),
                        x2 = coord(px + 3.0),
                        y = coord(y)
                    ));
                }
            }
        }
        let path: Vec<String> = pts
            .iter()
            .map(|p| format!("{},{}", coord(sx(p.x)), coord(sy(p.y))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for p in &pts {
            out.push_str(&format!(
                "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>\n",
                x = coord(sx(p.x)),
                y = coord(sy(p.y))
            ));
        }
    }

    // Legend.
    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let y = TOP + 10.0 + idx as f64 * 20.0;
        out.push_str(&format!(
            "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x1 = coord(RIGHT + 14.0),
            x2 = coord(RIGHT + 40.0),
            y = coord(y)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"12\">{t}</text>\n",
            x = coord(RIGHT + 46.0),
            y = coord(y + 4.0),
            t = esc(&s.label)
        ));
    }

    out.push_str("</svg>\n");
    Ok(out)
}
