//! Standalone SVG line and scatter plots with linear or log axes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>, style: Style) -> Self {
        Self {
            label: label.into(),
            xs,
            ys,
            style,
        }
    }

    /// `y` against `1, 2, 3, ...`.
    pub fn indexed(label: impl Into<String>, ys: Vec<f64>, style: Style) -> Self {
        let xs = (1..=ys.len()).map(|i| i as f64).collect();
        Self::new(label, xs, ys, style)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Dashed vertical markers with their labels.
    pub markers: Vec<(f64, String)>,
}

impl Axes {
    pub fn new(title: &str, x_label: &str, y_label: &str, x_scale: Scale, y_scale: Scale) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale,
            y_scale,
            markers: Vec::new(),
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn check(values: &[f64], scale: Scale, what: &str, label: &str) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("series `{label}` has non-finite {what} value {v}")));
    }
    if scale == Scale::Log {
        if let Some(v) = values.iter().find(|v| **v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "series `{label}` has non-positive {what} value {v} on a log axis"
            )));
        }
    }
    Ok(())
}

struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, scale: Scale) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let t = if scale == Scale::Log { v.log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        if scale == Scale::Log {
            (lo, hi) = (lo.floor(), hi.ceil());
        } else {
            let pad = 0.05 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { scale, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.scale == Scale::Log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions (in data units) and their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let (lo, hi) = (self.lo as i64, self.hi as i64);
                let stride = ((hi - lo) / 8 + 1).max(1);
                (lo..=hi)
                    .filter(|e| (e - lo) % stride == 0)
                    .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                    .collect()
            }
            Scale::Linear => {
                let span = self.hi - self.lo;
                let raw = span / 6.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0]
                    .iter()
                    .map(|m| m * mag)
                    .find(|s| *s >= raw)
                    .unwrap_or(10.0 * mag);
                let mut t = (self.lo / step).ceil() * step;
                let mut out = Vec::new();
                while t <= self.hi + 1e-9 * step {
                    out.push((t, format_tick(t, step)));
                    t += step;
                }
                out
            }
        }
    }
}

fn format_tick(v: f64, step: f64) -> String {
    if v.abs() < 1e-12 * step {
        return "0".into();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else if step >= 1.0 {
        format!("{v:.0}")
    } else {
        let digits = (-step.log10().floor()) as usize;
        format!("{v:.digits$}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `series` into an SVG document.
pub fn render_svg(series: &[Series], axes: &Axes) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.xs.is_empty()) {
        return Err(Error::Empty("plot series".into()));
    }
    for s in series {
        if s.xs.len() != s.ys.len() {
            return Err(Error::DimensionMismatch(format!("series `{}` has unequal x and y lengths", s.label)));
        }
        check(&s.xs, axes.x_scale, "x", &s.label)?;
        check(&s.ys, axes.y_scale, "y", &s.label)?;
    }
    let xa = Axis::fit(
        series.iter().flat_map(|s| s.xs.iter().copied()).chain(axes.markers.iter().map(|m| m.0)),
        axes.x_scale,
    );
    let ya = Axis::fit(series.iter().flat_map(|s| s.ys.iter().copied()), axes.y_scale);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xa.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - ya.frac(v)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&axes.title)
    );
    for (v, label) in xa.ticks() {
        let x = px(v);
        let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + ph);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, escape(&label));
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, escape(&label));
    }
    let _ = writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&axes.y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        match s.style {
            Style::Line => {
                let pts: Vec<String> = s
                    .xs
                    .iter()
                    .zip(&s.ys)
                    .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
                    .collect();
                let _ = writeln!(
                    w,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            Style::Points => {
                for (x, y) in s.xs.iter().zip(&s.ys) {
                    let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="{color}"/>"#, px(*x), py(*y));
                }
            }
        }
    }
    for (k, (v, label)) in axes.markers.iter().enumerate() {
        let x = px(*v);
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="5,4"/>"#,
            TOP + ph
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#, x + 4.0, TOP + 14.0 + 14.0 * k as f64, escape(label));
    }
    let lx = LEFT + pw - 150.0;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let y = TOP + ph - 14.0 * (series.len() - k) as f64;
        let _ = writeln!(w, r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="4" fill="{color}"/>"#, y - 4.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, lx + 18.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes a plot to `path`.
pub fn emit_plot(series: &[Series], axes: &Axes, path: &Path) -> Result<()> {
    let svg = render_svg(series, axes)?;
    std::fs::write(path, svg)?;
    Ok(())
}
