//! Minimal deterministic SVG plotting: fixed 800x600 view box, one polyline
//! per series, axis ticks at round numbers. Identical inputs produce
//! byte-identical documents.

use gridcert_core::{Error, Result};

const VIEW_W: f64 = 800.0;
const VIEW_H: f64 = 600.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn nice_step(raw: f64) -> f64 {
    let pow = 10f64.powf(raw.log10().floor());
    let frac = raw / pow;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * pow
}

fn tick_label(value: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let v = if value == 0.0 { 0.0 } else { value }; // avoid "-0"
    format!("{v:.decimals$}")
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

fn axis_for(min: f64, max: f64) -> Axis {
    let (mut min, mut max) = (min, max);
    if min == max {
        let pad = if min == 0.0 { 0.5 } else { min.abs() * 0.5 };
        min -= pad;
        max += pad;
    }
    let step = nice_step((max - min) / 5.0);
    let lo = (min / step).floor() * step;
    let hi = (max / step).ceil() * step;
    Axis { lo, hi, step }
}

impl Axis {
    fn ticks(&self) -> Vec<f64> {
        let mut ticks = Vec::new();
        let n = ((self.hi - self.lo) / self.step).round() as i64;
        for k in 0..=n {
            ticks.push(self.lo + k as f64 * self.step);
        }
        ticks
    }
}

/// Renders the series as a 2-D line plot. Non-finite points are dropped;
/// erroring when nothing plottable remains.
pub fn render_svg(series: &[Series], title: &str, x_label: &str, y_label: &str) -> Result<String> {
    let cleaned: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            (
                s.label.as_str(),
                s.points
                    .iter()
                    .copied()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    if cleaned.is_empty() || cleaned.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::InvalidArgument("no finite data points to plot".into()));
    }

    let all = cleaned.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x_min, mut x_max, mut y_min, mut y_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    let x_axis = axis_for(x_min, x_max);
    let y_axis = axis_for(y_min, y_max);

    let plot_w = VIEW_W - MARGIN_L - MARGIN_R;
    let plot_h = VIEW_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_axis.lo) / (x_axis.hi - x_axis.lo) * plot_w;
    let sy = |y: f64| VIEW_H - MARGIN_B - (y - y_axis.lo) / (y_axis.hi - y_axis.lo) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {VIEW_W:.0} {VIEW_H:.0}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{VIEW_W:.0}\" height=\"{VIEW_H:.0}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        escape(title)
    ));

    // axes
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L,
        VIEW_H - MARGIN_B,
        VIEW_W - MARGIN_R,
        VIEW_H - MARGIN_B
    ));
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L, MARGIN_T, MARGIN_L,
        VIEW_H - MARGIN_B
    ));

    for tick in x_axis.ticks() {
        let x = sx(tick);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            VIEW_H - MARGIN_B,
            VIEW_H - MARGIN_B + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            VIEW_H - MARGIN_B + 18.0,
            tick_label(tick, x_axis.step)
        ));
    }
    for tick in y_axis.ticks() {
        let y = sy(tick);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0,
            MARGIN_L
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            tick_label(tick, y_axis.step)
        ));
    }

    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        VIEW_H - 10.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    ));

    for (idx, (_, pts)) in cleaned.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[idx % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        ));
    }

    // legend only when it stays readable
    if cleaned.len() <= 8 {
        for (idx, (label, _)) in cleaned.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            let y = MARGIN_T + 14.0 + 16.0 * idx as f64;
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                MARGIN_L + 10.0,
                MARGIN_L + 34.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                MARGIN_L + 40.0,
                y + 4.0,
                escape(label)
            ));
        }
    }

    out.push_str("</svg>\n");
    Ok(out)
}
