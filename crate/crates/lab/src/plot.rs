//! Self-contained SVG output: sweep plots and localization scatter panels.
//!
//! Everything is formatted with fixed precision, so identical inputs give
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use rmsmd_core::lattice::{EmitterField, Region};
use rmsmd_core::PointSet;

use crate::config::{BoundKind, Scale};
use crate::error::{LabError, Result};
use crate::runner::SweepResult;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 560.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 420.0;

const BLUE: &str = "#1f5fa8";
const RED: &str = "#c0392b";
const GREEN: &str = "#2e8b57";
const GREY: &str = "#555555";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Maps data values to pixels on one axis.
#[derive(Debug, Clone, Copy)]
struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>, p0: f64, p1: f64, from_zero: bool) -> Self {
        let usable: Vec<f64> = values
            .filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0))
            .collect();
        let mut lo = usable.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = usable.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if usable.is_empty() {
            (lo, hi) = (1.0, 10.0);
        }
        match scale {
            Scale::Linear => {
                if from_zero {
                    lo = lo.min(0.0);
                }
                if hi == lo {
                    (lo, hi) = (lo - 1.0, hi + 1.0);
                }
                let pad = if from_zero { 0.05 * (hi - lo) } else { 0.0 };
                let step = nice_step((hi - lo + pad) / 6.0);
                lo = (lo / step).floor() * step;
                hi = ((hi + pad) / step).ceil() * step;
            }
            Scale::Log => {
                lo = 10f64.powf(lo.log10().floor());
                hi = 10f64.powf(hi.log10().ceil());
                if hi == lo {
                    hi = lo * 10.0;
                }
            }
        }
        Axis { scale, lo, hi, p0, p1 }
    }

    fn px(&self, v: f64) -> f64 {
        let t = match self.scale {
            Scale::Linear => (v - self.lo) / (self.hi - self.lo),
            Scale::Log => (v.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln()),
        };
        self.p0 + t * (self.p1 - self.p0)
    }

    fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.lo && v <= self.hi && (self.scale == Scale::Linear || v > 0.0)
    }

    fn ticks(&self) -> Vec<f64> {
        match self.scale {
            Scale::Linear => {
                let step = nice_step((self.hi - self.lo) / 6.0);
                let n = ((self.hi - self.lo) / step).round() as i64;
                (0..=n).map(|i| self.lo + i as f64 * step).collect()
            }
            Scale::Log => {
                let mut out = Vec::new();
                let mut decade = self.lo;
                while decade <= self.hi * (1.0 + 1e-9) {
                    for m in [1.0, 2.0, 5.0] {
                        let v = decade * m;
                        if v <= self.hi * (1.0 + 1e-9) {
                            out.push(v);
                        }
                    }
                    decade *= 10.0;
                }
                out
            }
        }
    }
}

fn nice_step(raw: f64) -> f64 {
    if !(raw > 0.0) {
        return 1.0;
    }
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1.0 && (v - v.round()).abs() < 1e-9 * v.abs() {
        return format!("{}", v.round() as i64);
    }
    let digits = (2 - v.abs().log10().floor() as i32).clamp(0, 6) as usize;
    let s = format!("{v:.digits$}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    dash: Option<&'a str>,
    mean: Vec<f64>,
    sd: Option<Vec<f64>>,
}

/// Renders the sweep as an SVG document.
pub fn plot_svg(result: &SweepResult) -> Result<String> {
    let summary = result.summary();
    if summary.is_empty() {
        return Err(LabError::EmptySweep);
    }
    let plot = &result.plot;
    let xs: Vec<f64> = summary.iter().map(|p| p.value).collect();

    let mut series = vec![Series {
        label: "RMSMD of X (simulated)",
        color: BLUE,
        dash: None,
        mean: summary.iter().map(|p| p.rmsmd_x.mean).collect(),
        sd: Some(summary.iter().map(|p| p.rmsmd_x.sd).collect()),
    }];
    series.push(Series {
        label: "RMSMD of X̂, oracle blocks (simulated)",
        color: RED,
        dash: None,
        mean: summary.iter().map(|p| p.rmsmd_xhat_oracle.mean).collect(),
        sd: Some(summary.iter().map(|p| p.rmsmd_xhat_oracle.sd).collect()),
    });
    if plot.voronoi {
        series.push(Series {
            label: "RMSMD of X̂, Voronoi blocks (simulated)",
            color: GREEN,
            dash: None,
            mean: summary.iter().map(|p| p.rmsmd_xhat_voronoi.mean).collect(),
            sd: Some(summary.iter().map(|p| p.rmsmd_xhat_voronoi.sd).collect()),
        });
    }
    series.push(Series {
        label: "RMSE of X (closed form)",
        color: BLUE,
        dash: Some("7,4"),
        mean: summary.iter().map(|p| p.rmse_x).collect(),
        sd: None,
    });
    series.push(Series {
        label: "RMSE of X̂ (closed form)",
        color: RED,
        dash: Some("7,4"),
        mean: summary.iter().map(|p| p.rmse_xhat).collect(),
        sd: None,
    });
    let bounds: Vec<(&str, f64)> = plot
        .bounds
        .iter()
        .map(|b| match b {
            BoundKind::Upper => ("a/√6", summary[0].bound_upper),
            BoundKind::Lower => ("√(1+e⁻¹)·a/√6", summary[0].bound_lower),
        })
        .collect();

    let mut ys: Vec<f64> = Vec::new();
    for s in &series {
        ys.extend(&s.mean);
        if let Some(sd) = &s.sd {
            ys.extend(s.mean.iter().zip(sd).map(|(m, d)| m + d));
        }
    }
    ys.extend(bounds.iter().map(|b| b.1));
    ys.extend(result.panels.iter().flat_map(|p| [p.rmsmd_x, p.rmsmd_xhat_oracle]));
    let xa = Axis::fit(plot.x_scale, xs.iter().copied(), LEFT, RIGHT, false);
    let ya = Axis::fit(plot.y_scale, ys.into_iter(), BOTTOM, TOP, true);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        escape(&result.name)
    );
    let _ = writeln!(w, r#"<defs><clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#, RIGHT - LEFT, BOTTOM - TOP);

    // axes and ticks
    let _ = writeln!(w, r##"<g class="axes" stroke="#000" fill="none">"##);
    let _ = writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}"/>"#, RIGHT - LEFT, BOTTOM - TOP);
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, r#"<g class="ticks">"#);
    for t in xa.ticks() {
        let x = xa.px(t);
        let _ = writeln!(w, r##"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, BOTTOM + 5.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, BOTTOM + 18.0, tick_label(t));
    }
    for t in ya.ticks() {
        let y = ya.px(t);
        let _ = writeln!(w, r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#000"/>"##, LEFT - 5.0);
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="#e6e6e6"/>"##);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 40.0,
        escape(result.axis.label())
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">RMSMD / RMSE (nm)</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );

    let _ = writeln!(w, r#"<g clip-path="url(#plot-area)">"#);
    for (label, v) in &bounds {
        let y = ya.px(*v);
        let _ = writeln!(
            w,
            r##"<line class="bound" data-label="{}" x1="{LEFT}" y1="{y:.2}" x2="{RIGHT}" y2="{y:.2}" stroke="{GREY}" stroke-width="1.2" stroke-dasharray="2,3"/>"##,
            escape(label)
        );
    }
    for s in &series {
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&s.mean)
            .filter(|(x, m)| xa.contains(**x) && m.is_finite() && (plot.y_scale == Scale::Linear || **m > 0.0))
            .map(|(x, m)| (xa.px(*x), ya.px(*m)))
            .collect();
        let _ = writeln!(w, r#"<g class="curve" data-label="{}">"#, escape(s.label));
        if let Some(sd) = &s.sd {
            // mean ± sd band; the lower edge is clamped to the axis floor
            let upper: Vec<String> = xs
                .iter()
                .zip(s.mean.iter().zip(sd))
                .map(|(x, (m, d))| format!("{:.2},{:.2}", xa.px(*x), ya.px((m + d).min(ya.hi))))
                .collect();
            let lower: Vec<String> = xs
                .iter()
                .zip(s.mean.iter().zip(sd))
                .rev()
                .map(|(x, (m, d))| format!("{:.2},{:.2}", xa.px(*x), ya.px((m - d).max(ya.lo))))
                .collect();
            let _ = writeln!(
                w,
                r#"<polygon class="band" points="{} {}" fill="{}" fill-opacity="0.18" stroke="none"/>"#,
                upper.join(" "),
                lower.join(" "),
                s.color
            );
        }
        let line: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let dash = s
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            line.join(" "),
            s.color
        );
        if s.dash.is_none() {
            for (x, y) in &pts {
                let _ = writeln!(w, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.2" fill="{}"/>"#, s.color);
            }
        }
        let _ = writeln!(w, "</g>");
    }
    for p in &result.panels {
        let x = xa.px(p.sweep_value);
        for (v, color) in [(p.rmsmd_x, BLUE), (p.rmsmd_xhat_oracle, RED)] {
            let y = ya.px(v);
            let _ = writeln!(
                w,
                r#"<rect class="marker" x="{:.2}" y="{:.2}" width="8" height="8" fill="none" stroke="{color}" stroke-width="1.4"/>"#,
                x - 4.0,
                y - 4.0
            );
        }
    }
    let _ = writeln!(w, "</g>");

    // legend
    let _ = writeln!(w, r#"<g class="legend">"#);
    let lx = RIGHT + 16.0;
    let mut ly = TOP + 8.0;
    let n = summary[0].replicates;
    let mut entry = |w: &mut String, color: &str, dash: &str, text: &str| {
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
            lx + 24.0
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#, lx + 30.0, ly + 3.5, escape(text));
        ly += 18.0;
    };
    for s in &series {
        let dash = s
            .dash
            .map(|d| format!(r#" stroke-dasharray="{d}""#))
            .unwrap_or_default();
        entry(w, s.color, &dash, s.label);
    }
    for (label, _) in &bounds {
        entry(w, GREY, r#" stroke-dasharray="2,3""#, &format!("bound {label}"));
    }
    let _ = writeln!(
        w,
        r#"<text x="{lx:.2}" y="{:.2}" font-size="10">bands: replicate mean ± sd (n = {n})</text>"#,
        ly + 8.0
    );
    if !result.panels.is_empty() {
        let _ = writeln!(w, r#"<text x="{lx:.2}" y="{:.2}" font-size="10">squares: scatter panels</text>"#, ly + 24.0);
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Writes the sweep plot to `path`.
pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    let svg = plot_svg(result)?;
    std::fs::write(path, svg).map_err(|e| LabError::io(path, e))
}

/// Scatter of `points` over the field: dotted Voronoi cell borders for a
/// lattice, emitter crosses and one dot per point. Points on a lattice
/// torus are drawn in the window `[−a/2, L − a/2)` so that every cell is
/// whole.
pub fn scatter_svg(points: &PointSet, field: &EmitterField, title: &str) -> Result<String> {
    if points.dim() != 2 || field.dim() != 2 {
        return Err(LabError::Core(rmsmd_core::Error::UnsupportedDimension(points.dim())));
    }
    let half = field.pitch().map(|a| a / 2.0).unwrap_or(0.0);
    let (lower, upper) = match field.region() {
        Region::Torus { extent } => (vec![-half, -half], vec![extent[0] - half, extent[1] - half]),
        Region::Box { lower, upper } => (lower.clone(), upper.clone()),
    };
    let torus = matches!(field.region(), Region::Torus { .. });
    let place = |p: &[f64], k: usize| -> f64 {
        if torus {
            let l = upper[k] - lower[k];
            (p[k] - lower[k]).rem_euclid(l) + lower[k]
        } else {
            p[k]
        }
    };

    let size = 640.0;
    let margin = 40.0;
    let span = (upper[0] - lower[0]).max(upper[1] - lower[1]);
    let s = size / span;
    let px = |x: f64| margin + (x - lower[0]) * s;
    // y grows upwards in the image
    let py = |y: f64| margin + (upper[1] - y) * s;
    let w_px = (upper[0] - lower[0]) * s + 2.0 * margin;
    let h_px = (upper[1] - lower[1]) * s + 2.0 * margin;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.2}" height="{h_px:.2}" viewBox="0 0 {w_px:.2} {h_px:.2}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{w_px:.2}" height="{h_px:.2}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{:.2}" y="24" text-anchor="middle">{}</text>"#, w_px / 2.0, escape(title));
    let _ = writeln!(
        w,
        r##"<rect class="region" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        px(lower[0]),
        py(upper[1]),
        (upper[0] - lower[0]) * s,
        (upper[1] - lower[1]) * s
    );
    if let (Some(a), Some((rows, cols))) = (field.pitch(), field.grid_dims()) {
        let _ = writeln!(w, r##"<g class="cells" stroke="#888" stroke-dasharray="1,3">"##);
        for i in 1..rows {
            let x = px(i as f64 * a - half);
            let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#, py(upper[1]), py(lower[1]));
        }
        for j in 1..cols {
            let y = py(j as f64 * a - half);
            let _ = writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, px(lower[0]), px(upper[0]));
        }
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, r##"<g class="emitters" stroke="#000" stroke-width="1.2">"##);
    for e in field.emitters().iter() {
        let (x, y) = (px(place(e, 0)), py(place(e, 1)));
        let _ = writeln!(
            w,
            r#"<path class="emitter" d="M{:.2},{y:.2}H{:.2}M{x:.2},{:.2}V{:.2}"/>"#,
            x - 4.0,
            x + 4.0,
            y - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, r#"<g class="localizations" fill="{RED}" fill-opacity="0.7">"#);
    for p in points.iter() {
        let _ = writeln!(
            w,
            r#"<circle class="loc" cx="{:.2}" cy="{:.2}" r="1.6"/>"#,
            px(place(p, 0)),
            py(place(p, 1))
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Writes a scatter panel to `path`.
pub fn render_scatter(points: &PointSet, field: &EmitterField, title: &str, path: &Path) -> Result<()> {
    let svg = scatter_svg(points, field, title)?;
    std::fs::write(path, svg).map_err(|e| LabError::io(path, e))
}
