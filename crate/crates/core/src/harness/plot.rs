//! Self-contained SVG line charts of metric CSVs.
//!
//! Each label becomes one series: the mean over seeds of the chosen metric
//! at each sampled step. `NaN` samples (no completed episode yet) are
//! skipped. On a log axis, values at or below [`LOG_FLOOR`] are clamped to it
//! and the chart carries a visible warning.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::output::CsvRow;

/// Clamp value for non-positive samples on a log-scaled axis.
pub const LOG_FLOOR: f64 = 1e-3;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 220.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Reward,
    RiverSteps,
    PathLength,
}

impl Metric {
    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "reward" | "cum_mean_reward" => Some(Metric::Reward),
            "river" | "river_steps" | "cum_mean_river_steps" => Some(Metric::RiverSteps),
            "path" | "path_length" | "cum_mean_path_length" => Some(Metric::PathLength),
            _ => None,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Metric::Reward => "cum_mean_reward",
            Metric::RiverSteps => "cum_mean_river_steps",
            Metric::PathLength => "cum_mean_path_length",
        }
    }

    fn of(self, row: &CsvRow) -> f64 {
        match self {
            Metric::Reward => row.cum_mean_reward,
            Metric::RiverSteps => row.cum_mean_river_steps,
            Metric::PathLength => row.cum_mean_path_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Mean across seeds per `(label, t)`, labels in first-seen order.
pub fn aggregate_series(rows: &[CsvRow], metric: Metric) -> Vec<Series> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(usize, u64), (f64, usize)> = BTreeMap::new();
    for row in rows {
        let li = match order.iter().position(|l| *l == row.label) {
            Some(i) => i,
            None => {
                order.push(row.label.clone());
                order.len() - 1
            }
        };
        let v = metric.of(row);
        let e = acc.entry((li, row.t)).or_insert((0.0, 0));
        if !v.is_nan() {
            e.0 += v;
            e.1 += 1;
        }
    }
    order
        .into_iter()
        .enumerate()
        .map(|(li, label)| Series {
            label,
            points: acc
                .range((li, 0)..=(li, u64::MAX))
                .filter(|(_, (_, n))| *n > 0)
                .map(|(&(_, t), &(s, n))| (t as f64, s / n as f64))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_scale: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders `series` to an SVG string.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Plot("no series to plot".into()));
    }
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Plot("every series is empty".into()));
    }
    let mut clamped = false;
    let tf = |v: f64, clamped: &mut bool| -> f64 {
        if opts.log_scale {
            if v <= LOG_FLOOR {
                *clamped = true;
                LOG_FLOOR.log10()
            } else {
                v.log10()
            }
        } else {
            v
        }
    };
    let data: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|&(x, y)| (x, tf(y, &mut clamped)))
                .collect()
        })
        .collect();
    let all = data.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        let pad = if y0 == 0.0 { 1.0 } else { y0.abs() * 0.1 };
        y0 -= pad;
        y1 += pad;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(
        w,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let label_y = if opts.log_scale { 10f64.powf(yv) } else { yv };
        let _ = writeln!(
            w,
            r#"<text class="xtick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(xv),
            MARGIN_T + ph + 18.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            w,
            r#"<text class="ytick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            py(yv) + 4.0,
            fmt_tick(label_y)
        );
    }
    let _ = writeln!(
        w,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 15.0,
        escape(&opts.x_label)
    );
    let ylabel = if opts.log_scale {
        format!("{} (log scale)", opts.y_label)
    } else {
        opts.y_label.clone()
    };
    let _ = writeln!(
        w,
        r#"<text class="ylabel" transform="translate(20,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_T + ph / 2.0,
        escape(&ylabel)
    );
    for (i, (s, pts)) in series.iter().zip(&data).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = MARGIN_T + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            w,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    if clamped {
        let _ = writeln!(
            w,
            r#"<text class="warning" x="{MARGIN_L}" y="{}" fill="firebrick">warning: values at or below {LOG_FLOOR} clamped to {LOG_FLOOR} on the log axis</text>"#,
            MARGIN_T - 8.0
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Writes the chart for `series` to `path`.
pub fn emit_plot(series: &[Series], path: &Path, opts: &PlotOptions) -> Result<()> {
    let svg = render_svg(series, opts)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
