//! Static SVG figures built from plain polyline, line and rect elements.
//!
//! Output depends only on the data passed in, so re-running an experiment
//! rewrites identical files.

use std::fmt::Write;

use crate::clustering::LayerPurity;
use crate::trainer::{AblationRow, RunReport};

const W: f64 = 720.0;
const MARGIN: f64 = 48.0;

struct Svg {
    out: String,
}

impl Svg {
    fn new(height: f64, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        Self { out }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        if pts.is_empty() {
            return;
        }
        let mut p = String::new();
        for (x, y) in pts {
            let _ = write!(p, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#,
            p.trim_end()
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            escape(s)
        );
    }

    /// Frame with min/max labels on the y axis.
    fn frame(&mut self, top: f64, bottom: f64, y_lo: f64, y_hi: f64, label: &str) {
        self.line(MARGIN, top, MARGIN, bottom, r#"stroke="black""#);
        self.line(MARGIN, bottom, W - MARGIN, bottom, r#"stroke="black""#);
        self.text(MARGIN - 4.0, top + 4.0, "end", &format!("{y_hi:.3}"));
        self.text(MARGIN - 4.0, bottom, "end", &format!("{y_lo:.3}"));
        self.text(MARGIN + 4.0, top - 4.0, "start", label);
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn scale(v: f64, lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> f64 {
    if hi > lo {
        px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo)
    } else {
        (px_lo + px_hi) / 2.0
    }
}

/// Loss (top) and active width (bottom) over training, with dashed domain
/// boundaries and a red tick per expansion.
pub fn training_curves(r: &RunReport, title: &str) -> String {
    let height = 420.0;
    let mut svg = Svg::new(height, title);
    let steps = r.losses.len().max(1) as f64;
    let x = |s: f64| scale(s, 0.0, steps, MARGIN, W - MARGIN);
    let (lt, lb) = (40.0, 230.0);
    let (dt, db) = (270.0, 390.0);
    let lmax = r.losses.iter().cloned().fold(0.0f64, f64::max);
    svg.frame(lt, lb, 0.0, lmax, "training loss");
    let pts: Vec<(f64, f64)> = r
        .losses
        .iter()
        .enumerate()
        .map(|(i, &l)| (x(i as f64), scale(l, 0.0, lmax, lb, lt)))
        .collect();
    svg.polyline(&pts, "steelblue");

    let (dlo, dhi) = (r.d_base.min(r.d_final) as f64, r.d_max as f64);
    svg.frame(dt, db, dlo, dhi, "active dimensions");
    let pts: Vec<(f64, f64)> = r
        .d_trace
        .iter()
        .enumerate()
        .map(|(i, &d)| (x(i as f64), scale(d as f64, dlo, dhi, db, dt)))
        .collect();
    svg.polyline(&pts, "darkgreen");

    for &b in &r.boundaries {
        for (t, bt) in [(lt, lb), (dt, db)] {
            svg.line(x(b as f64), t, x(b as f64), bt, r##"stroke="#999" stroke-dasharray="3,3""##);
        }
    }
    for e in &r.events {
        svg.line(x(e.step as f64), lt, x(e.step as f64), lt + 10.0, r#"stroke="red" stroke-width="2""#);
    }
    svg.text(W / 2.0, height - 8.0, "middle", "step");
    svg.finish()
}

/// Domains as rows, evaluation points as columns, shaded by held-out
/// accuracy. Domains not yet introduced are left light grey.
pub fn accuracy_strip(r: &RunReport, title: &str) -> String {
    let n_dom = r.evals.first().map_or(0, |e| e.per_domain.len());
    let row_h = (300.0 / n_dom.max(1) as f64).clamp(4.0, 18.0);
    let height = 60.0 + row_h * n_dom as f64 + 20.0;
    let mut svg = Svg::new(height, title);
    let cols = r.evals.len().max(1) as f64;
    let cell_w = (W - 2.0 * MARGIN) / cols;
    for (j, e) in r.evals.iter().enumerate() {
        for (d, acc) in e.per_domain.iter().enumerate() {
            let fill = match acc {
                Some(a) => {
                    // White at 0, dark blue at 1.
                    let c = |lo: f64| (255.0 - a.clamp(0.0, 1.0) * (255.0 - lo)).round() as u8;
                    format!("rgb({},{},{})", c(8.0), c(48.0), c(107.0))
                }
                None => "#eeeeee".to_string(),
            };
            svg.rect(MARGIN + j as f64 * cell_w, 40.0 + d as f64 * row_h, cell_w + 0.05, row_h, &fill);
        }
    }
    for d in (0..n_dom).step_by(n_dom.div_ceil(10).max(1)) {
        svg.text(MARGIN - 4.0, 40.0 + (d as f64 + 0.8) * row_h, "end", &format!("d{d}"));
    }
    svg.text(W / 2.0, height - 8.0, "middle", "evaluation step (left to right); shade = accuracy");
    svg.finish()
}

/// One bar per ablation condition; height is the accuracy drop.
pub fn ablation_bars(rows: &[AblationRow], title: &str) -> String {
    let height = 300.0;
    let mut svg = Svg::new(height, title);
    let (top, bottom) = (40.0, 250.0);
    let hi = rows.iter().map(|r| r.drop).fold(0.0f64, f64::max);
    let lo = rows.iter().map(|r| r.drop).fold(0.0f64, f64::min);
    svg.frame(top, bottom, lo, hi, "accuracy drop");
    let zero = scale(0.0, lo, hi, bottom, top);
    let bw = (W - 2.0 * MARGIN) / rows.len().max(1) as f64;
    for (i, r) in rows.iter().enumerate() {
        let y = scale(r.drop, lo, hi, bottom, top);
        let x0 = MARGIN + i as f64 * bw + bw * 0.15;
        svg.rect(x0, y.min(zero), bw * 0.7, (y - zero).abs(), "indianred");
        svg.text(x0 + bw * 0.35, bottom + 14.0, "middle", &r.condition.to_string());
    }
    svg.finish()
}

/// Purity against layer index.
pub fn purity_curve(rows: &[LayerPurity], title: &str) -> String {
    let height = 300.0;
    let mut svg = Svg::new(height, title);
    let (top, bottom) = (40.0, 250.0);
    svg.frame(top, bottom, 0.0, 1.0, "cluster purity");
    let lmax = rows.iter().map(|r| r.layer).max().unwrap_or(0) as f64;
    let lmin = rows.iter().map(|r| r.layer).min().unwrap_or(0) as f64;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            (
                scale(r.layer as f64, lmin, lmax, MARGIN, W - MARGIN),
                scale(r.report.purity, 0.0, 1.0, bottom, top),
            )
        })
        .collect();
    svg.polyline(&pts, "purple");
    for ((x, _), r) in pts.iter().zip(rows) {
        svg.text(*x, bottom + 14.0, "middle", &r.layer.to_string());
    }
    svg.text(W / 2.0, height - 8.0, "middle", "layer");
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::AblationCondition;

    #[test]
    fn bars_are_well_formed_and_deterministic() {
        let rows = vec![
            AblationRow {
                condition: AblationCondition::Baseline,
                accuracy: 0.9,
                drop: 0.0,
            },
            AblationRow {
                condition: AblationCondition::Dim(64),
                accuracy: 0.88,
                drop: 0.02,
            },
        ];
        let a = ablation_bars(&rows, "a < b");
        assert_eq!(a, ablation_bars(&rows, "a < b"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("fill=\"indianred\"").count(), 2);
    }
}
