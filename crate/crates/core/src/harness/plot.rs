//! Minimal standalone SVG charts: polylines and point scatters.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::diagnostics::{MetricsRow, RowKind};

pub const SMOOTHING_WINDOW: usize = 10;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Centered moving average; the window shrinks at the edges.
pub fn moving_average(ys: &[f64], window: usize) -> Vec<f64> {
    let half_lo = window.saturating_sub(1) / 2;
    let half_hi = window / 2;
    (0..ys.len())
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi + 1).min(ys.len());
            ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(*x);
            f.x1 = f.x1.max(*x);
            f.y0 = f.y0.min(*y);
            f.y1 = f.y1.max(*y);
        }
        if !f.x0.is_finite() {
            f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        if f.x1 <= f.x0 {
            f.x1 = f.x0 + 1.0;
        }
        if f.y1 <= f.y0 {
            f.y1 = f.y0 + 1.0;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn header(svg: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(svg, r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (v, x, y, anchor) in [
        (f.x0, l, b + 16.0, "start"),
        (f.x1, r, b + 16.0, "end"),
        (f.y0, l - 4.0, b, "end"),
        (f.y1, l - 4.0, t + 4.0, "end"),
    ] {
        let _ = writeln!(svg, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v));
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let f = Frame::fit(series.iter().flat_map(|(_, pts)| pts.iter()));
    let mut svg = String::new();
    header(&mut svg, title, xlabel, ylabel, &f);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            W - MARGIN,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn scatter_chart(title: &str, xlabel: &str, ylabel: &str, points: &[(f64, f64)]) -> String {
    let f = Frame::fit(points.iter());
    let mut svg = String::new();
    header(&mut svg, title, xlabel, ylabel, &f);
    for (x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.5"/>"#,
            f.px(*x),
            f.py(*y),
            COLORS[0]
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn smoothed(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().copied().zip(moving_average(ys, SMOOTHING_WINDOW)).collect()
}

/// `learning_curve.svg`, `heights.svg` and, for goods variants, `unloads.svg`.
pub fn write_run_plots(dir: &Path, rows: &[MetricsRow], unloads: &[(f64, f64)], has_goods: bool) -> Result<()> {
    let eps: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == RowKind::Episode).collect();
    let evals: Vec<&MetricsRow> = rows.iter().filter(|r| r.kind == RowKind::Eval).collect();
    let ex: Vec<f64> = eps.iter().map(|r| r.step as f64).collect();
    let train: Vec<f64> = eps.iter().map(|r| r.extrinsic_return).collect();
    let curve = line_chart(
        "Return (smoothed, window 10)",
        "environment steps",
        "extrinsic return",
        &[
            ("training episodes".into(), smoothed(&ex, &train)),
            (
                "greedy eval mean".into(),
                evals.iter().map(|r| (r.step as f64, r.extrinsic_return)).collect(),
            ),
        ],
    );
    write_svg(&dir.join("learning_curve.svg"), &curve)?;
    let any: Vec<f64> = eps.iter().map(|r| r.max_height_any.unwrap_or(f64::NAN)).collect();
    let pre: Vec<f64> = eps.iter().map(|r| r.max_height_pre_exhaustion.unwrap_or(f64::NAN)).collect();
    let heights = line_chart(
        "Max height per episode (smoothed, window 10)",
        "environment steps",
        "height",
        &[
            ("whole episode".into(), smoothed(&ex, &any)),
            ("before exhaustion".into(), smoothed(&ex, &pre)),
        ],
    );
    write_svg(&dir.join("heights.svg"), &heights)?;
    if has_goods {
        write_svg(
            &dir.join("unloads.svg"),
            &scatter_chart("States where goods were unloaded", "position", "velocity", unloads),
        )?;
    }
    Ok(())
}
