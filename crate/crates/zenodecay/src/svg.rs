//! Static SVG 1.1 line plots. Output is a pure function of the input, so
//! identical series render to identical bytes.

use crate::error::{Error, Result};

/// One named line of a plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

/// Axis and canvas options.
#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "t".into(),
            y_label: "survival".into(),
            log_x: false,
            log_y: false,
            width: 720,
            height: 480,
        }
    }
}

const PALETTE: [&str; 6] = [
    "#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#d68910", "#17202a",
];

const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// Render the series to a self-contained SVG document.
pub fn render_plot(series: &[Series], options: &PlotOptions) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(Error::InvalidInput("every plotted series needs points".into()));
    }
    let map_x = |x: f64| if options.log_x { x.log10() } else { x };
    let map_y = |y: f64| if options.log_y { y.log10() } else { y };
    let usable = |x: f64, y: f64| {
        (!options.log_x || x > 0.0) && (!options.log_y || y > 0.0) && x.is_finite() && y.is_finite()
    };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if usable(x, y) {
                x_min = x_min.min(map_x(x));
                x_max = x_max.max(map_x(x));
                y_min = y_min.min(map_y(y));
                y_max = y_max.max(map_y(y));
            }
        }
    }
    if !x_min.is_finite() || !y_min.is_finite() {
        return Err(Error::InvalidInput(
            "no representable points (log axes drop non-positive values)".into(),
        ));
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
        x_min -= 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
        y_min -= 1.0;
    }
    let w = options.width as f64;
    let h = options.height as f64;
    let px = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * (w - MARGIN_L - MARGIN_R);
    let py = |y: f64| h - MARGIN_B - (y - y_min) / (y_max - y_min) * (h - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    out.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        options.width, options.height, options.width, options.height
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if !options.title.is_empty() {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_L + w - MARGIN_R) / 2.0,
            escape(&options.title)
        ));
    }
    // frame
    out.push_str(&format!(
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        MARGIN_L,
        MARGIN_T,
        w - MARGIN_L - MARGIN_R,
        h - MARGIN_T - MARGIN_B
    ));
    // ticks
    for t in ticks(x_min, x_max) {
        let x = px(t);
        out.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            h - MARGIN_B,
            h - MARGIN_B + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            h - MARGIN_B + 18.0,
            tick_label(t, options.log_x)
        ));
    }
    for t in ticks(y_min, y_max) {
        let y = py(t);
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            MARGIN_L - 5.0,
            MARGIN_L
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            tick_label(t, options.log_y)
        ));
    }
    // axis labels
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + w - MARGIN_R) / 2.0,
        h - 12.0,
        escape(&options.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (MARGIN_T + h - MARGIN_B) / 2.0,
        (MARGIN_T + h - MARGIN_B) / 2.0,
        escape(&options.y_label)
    ));
    // series
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if usable(x, y) {
                let cmd = if pen_down { 'L' } else { 'M' };
                path.push_str(&format!("{cmd}{:.2},{:.2} ", px(map_x(x)), py(map_y(y))));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        if !path.is_empty() {
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            ));
        }
        // legend entry
        let ly = MARGIN_T + 16.0 + 18.0 * k as f64;
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            w - MARGIN_R + 12.0,
            w - MARGIN_R + 34.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            w - MARGIN_R + 40.0,
            ly + 4.0,
            escape(&s.name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render and write; the file contents are byte-deterministic.
pub fn emit_plot(series: &[Series], options: &PlotOptions, path: &std::path::Path) -> Result<()> {
    let svg = render_plot(series, options)?;
    std::fs::write(path, svg)?;
    Ok(())
}

/// Up to ~6 round tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let range = hi - lo;
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| range / s <= 6.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(value: f64, log_axis: bool) -> String {
    if log_axis {
        format!("1e{value:.0}")
    } else if value != 0.0 && (value.abs() >= 1e4 || value.abs() < 1e-3) {
        format!("{value:.1e}")
    } else {
        let s = format!("{value:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s.is_empty() { "0".into() } else { s.to_string() }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
