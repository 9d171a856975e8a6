//! Standalone SVG line charts: one mean polyline per curve over a translucent
//! ±1 standard-error band.

use std::fmt::Write as _;
use std::path::Path;

use super::aggregate::AggregateCurve;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Mapping between data coordinates and SVG pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotFrame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl PlotFrame {
    pub fn for_curves(curves: &[(String, AggregateCurve)]) -> Self {
        let points = curves.iter().flat_map(|(_, c)| c.points.iter()).filter(|p| p.mean.is_finite());
        let (mut x_min, mut x_max, mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x_min = x_min.min(p.episode as f64);
            x_max = x_max.max(p.episode as f64);
            y_min = y_min.min(p.mean - p.stderr);
            y_max = y_max.max(p.mean + p.stderr);
        }
        if !x_min.is_finite() {
            (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
        }
        if x_max <= x_min {
            x_max = x_min + 1.0;
        }
        let pad = if y_max > y_min { 0.05 * (y_max - y_min) } else { y_min.abs().max(1.0) * 0.1 };
        Self { x_min, x_max, y_min: y_min - pad, y_max: y_max + pad }
    }

    fn plot_width() -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_height() -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * Self::plot_width();
        let py = MARGIN_TOP + (self.y_max - y) / (self.y_max - self.y_min) * Self::plot_height();
        (px, py)
    }

    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let x = self.x_min + (px - MARGIN_LEFT) / Self::plot_width() * (self.x_max - self.x_min);
        let y = self.y_max - (py - MARGIN_TOP) / Self::plot_height() * (self.y_max - self.y_min);
        (x, y)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Render curves to an SVG document. All curves must have the same length.
pub fn render_svg(curves: &[(String, AggregateCurve)], y_label: &str) -> Result<String> {
    if let Some((_, first)) = curves.first() {
        if let Some((name, c)) = curves.iter().find(|(_, c)| c.len() != first.len()) {
            return Err(Error::invalid(
                "curves",
                format!("curve `{name}` has {} points, expected {}", c.len(), first.len()),
            ));
        }
    }
    let frame = PlotFrame::for_curves(curves);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let (x0, y0) = frame.to_px(frame.x_min, frame.y_min);
    let (x1, y1) = frame.to_px(frame.x_max, frame.y_max);
    let _ = writeln!(svg, r#"<line class="axis" x1="{x0:.4}" y1="{y0:.4}" x2="{x1:.4}" y2="{y0:.4}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line class="axis" x1="{x0:.4}" y1="{y0:.4}" x2="{x0:.4}" y2="{y1:.4}" stroke="black"/>"#);
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let (px, _) = frame.to_px(xv, frame.y_min);
        let _ = writeln!(svg, r#"<text x="{px:.4}" y="{:.4}" text-anchor="middle">{}</text>"#, y0 + 18.0, fmt_tick(xv));
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let (_, py) = frame.to_px(frame.x_min, yv);
        let _ = writeln!(svg, r#"<text x="{:.4}" y="{:.4}" text-anchor="end">{}</text>"#, x0 - 6.0, py + 4.0, fmt_tick(yv));
    }
    let _ = writeln!(svg, r#"<text x="{:.4}" y="{:.4}" text-anchor="middle">episode</text>"#, (x0 + x1) / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.4}" text-anchor="middle" transform="rotate(-90 16 {:.4})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );

    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<_> = curve.points.iter().filter(|p| p.mean.is_finite()).collect();
        let mut band = String::new();
        for p in pts.iter() {
            let (px, py) = frame.to_px(p.episode as f64, p.mean + p.stderr);
            let _ = write!(band, "{px:.4},{py:.4} ");
        }
        for p in pts.iter().rev() {
            let (px, py) = frame.to_px(p.episode as f64, p.mean - p.stderr);
            let _ = write!(band, "{px:.4},{py:.4} ");
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="band" data-curve="{i}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = pts
            .iter()
            .map(|p| {
                let (px, py) = frame.to_px(p.episode as f64, p.mean);
                format!("{px:.4},{py:.4}")
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="mean" data-curve="{i}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{lx:.4}" y1="{ly:.4}" x2="{:.4}" y2="{ly:.4}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{:.4}" y="{:.4}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(curves: &[(String, AggregateCurve)], y_label: &str, path: &Path) -> Result<()> {
    let svg = render_svg(curves, y_label)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
