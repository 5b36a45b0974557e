//! Minimal SVG line charts for experiment outputs.
//!
//! Deliberately dependency-free and deterministic: the same data always
//! renders to the same bytes. Good enough for rate-versus-SNR curves on a
//! log axis; anything fancier belongs in a notebook, not here.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One labeled curve.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Axis scaling for a chart dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

/// Chart description: title, axis labels and scales.
#[derive(Debug, Clone)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Floor substituted for nonpositive values on a log axis (rates of
    /// zero still need a place on the canvas).
    pub log_floor: f64,
}

impl ChartSpec {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            log_floor: 1e-4,
        }
    }

    pub fn log_y(mut self) -> Self {
        self.y_scale = Scale::Log10;
        self
    }

    pub fn log_x(mut self) -> Self {
        self.x_scale = Scale::Log10;
        self
    }
}

fn transform(v: f64, scale: Scale, floor: f64) -> f64 {
    match scale {
        Scale::Linear => v,
        Scale::Log10 => v.max(floor).log10(),
    }
}

fn ticks(lo: f64, hi: f64, scale: Scale) -> Vec<(f64, String)> {
    match scale {
        Scale::Linear => {
            let span = (hi - lo).abs().max(1e-12);
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| span / s <= 6.0)
                .unwrap_or(mag * 10.0);
            let first = (lo / step).ceil() * step;
            let mut out = Vec::new();
            let mut t = first;
            while t <= hi + step * 1e-9 {
                let label = if step >= 1.0 {
                    format!("{t:.0}")
                } else {
                    format!("{t}")
                };
                out.push((t, label));
                t += step;
            }
            out
        }
        Scale::Log10 => {
            // lo/hi arrive already log10-transformed.
            let mut out = Vec::new();
            let mut e = lo.ceil() as i64;
            while (e as f64) <= hi + 1e-9 {
                out.push((e as f64, format!("1e{e}")));
                e += 1;
            }
            out
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the chart to an SVG string.
pub fn render_chart(spec: &ChartSpec, series: &[Series]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(transform(x, spec.x_scale, spec.log_floor));
            ys.push(transform(y, spec.y_scale, spec.log_floor));
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);

    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        esc(&spec.title)
    )
    .unwrap();

    // Frame.
    writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"#
    )
    .unwrap();

    for (t, label) in ticks(x_lo, x_hi, spec.x_scale) {
        let x = sx(t);
        writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="#ccc"/>"#,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            esc(&label)
        )
        .unwrap();
    }
    for (t, label) in ticks(y_lo, y_hi, spec.y_scale) {
        let y = sy(t);
        writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ccc"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            MARGIN_LEFT - 6.0,
            esc(&label)
        )
        .unwrap();
    }

    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        esc(&spec.x_label)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        esc(&spec.y_label)
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let px = sx(transform(x, spec.x_scale, spec.log_floor));
                let py = sy(transform(y, spec.y_scale, spec.log_floor));
                format!("{px:.2},{py:.2}")
            })
            .collect();
        if path.len() > 1 {
            writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                path.join(" ")
            )
            .unwrap();
        }
        for p in &path {
            let (px, py) = p.split_once(',').unwrap();
            writeln!(svg, r#"<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>"#).unwrap();
        }
        // Legend entry.
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            esc(&s.label)
        )
        .unwrap();
    }

    writeln!(svg, "</svg>").unwrap();
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Render and write the chart to a file.
pub fn write_chart(path: &Path, spec: &ChartSpec, series: &[Series]) -> Result<()> {
    std::fs::write(path, render_chart(spec, series))?;
    Ok(())
}
