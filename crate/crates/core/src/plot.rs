//! Scatter data for frontier plots, plus a minimal SVG renderer.
//!
//! The CSV carries every objective so any projection can be plotted from
//! it. The SVG draws one panel per dataset and space on that space's axes
//! (cost on a log scale) and marks frontier members.

use std::fmt::Write as _;

use serde::Serialize;

use crate::decision::{Candidate, ObjectiveSpace, ParetoResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub dataset_id: String,
    pub objective_space: ObjectiveSpace,
    pub candidate: String,
    pub f1: f64,
    pub cost_usd_per_million: f64,
    pub p50_latency_ms: f64,
    pub on_frontier: bool,
    pub dominated_by: Option<String>,
}

/// One point per candidate, ordered by label.
pub fn scatter_points(result: &ParetoResult) -> Vec<ScatterPoint> {
    let point = |c: &Candidate, witness: Option<&Candidate>| ScatterPoint {
        dataset_id: c.dataset_id.clone(),
        objective_space: result.objective_space,
        candidate: c.label(),
        f1: c.f1,
        cost_usd_per_million: c.cost_usd_per_million,
        p50_latency_ms: c.p50_latency_ms,
        on_frontier: witness.is_none(),
        dominated_by: witness.map(Candidate::label),
    };
    let mut points: Vec<ScatterPoint> = result
        .frontier
        .iter()
        .map(|c| point(c, None))
        .chain(
            result
                .dominated
                .iter()
                .map(|d| point(&d.candidate, Some(&d.dominated_by))),
        )
        .collect();
    points.sort_by(|a, b| a.candidate.cmp(&b.candidate));
    points
}

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "dataset_id",
        "objective_space",
        "candidate",
        "f1",
        "cost_usd_per_million",
        "p50_latency_ms",
        "on_frontier",
        "dominated_by",
    ])
    .expect("csv write");
    for p in points {
        w.write_record([
            p.dataset_id.as_str(),
            p.objective_space.as_str(),
            &p.candidate,
            &p.f1.to_string(),
            &p.cost_usd_per_million.to_string(),
            &p.p50_latency_ms.to_string(),
            if p.on_frontier { "true" } else { "false" },
            p.dominated_by.as_deref().unwrap_or(""),
        ])
        .expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, Copy)]
enum Axis {
    F1,
    Cost,
    Latency,
}

impl Axis {
    fn value(self, p: &ScatterPoint) -> f64 {
        match self {
            Axis::F1 => p.f1,
            Axis::Cost => p.cost_usd_per_million.max(f64::MIN_POSITIVE).log10(),
            Axis::Latency => p.p50_latency_ms,
        }
    }

    fn title(self) -> &'static str {
        match self {
            Axis::F1 => "macro F1",
            Axis::Cost => "USD per 1M requests (log10)",
            Axis::Latency => "p50 latency (ms)",
        }
    }

    fn tick(self, v: f64) -> String {
        match self {
            Axis::F1 => format!("{v:.3}"),
            Axis::Cost => format!("{:.2}", 10f64.powf(v)),
            Axis::Latency => format!("{v:.0}"),
        }
    }
}

/// (x, y) axes for a space; the 3-D space is drawn as F1 against cost.
fn axes(space: ObjectiveSpace) -> (Axis, Axis) {
    match space {
        ObjectiveSpace::F1VsCost | ObjectiveSpace::F1LatencyCost3d => (Axis::Cost, Axis::F1),
        ObjectiveSpace::CostVsLatency => (Axis::Latency, Axis::Cost),
        ObjectiveSpace::F1VsLatency => (Axis::Latency, Axis::F1),
    }
}

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo {
        (hi - lo) * 0.08
    } else {
        0.5_f64.max(lo.abs() * 0.05)
    };
    (lo - pad, hi + pad)
}

/// Self-contained SVG with one panel per dataset and space, in the order
/// the points are given.
pub fn scatter_svg(points: &[ScatterPoint]) -> String {
    let mut panels_of: Vec<(&str, ObjectiveSpace)> = Vec::new();
    for p in points {
        let key = (p.dataset_id.as_str(), p.objective_space);
        if !panels_of.contains(&key) {
            panels_of.push(key);
        }
    }
    let panels = panels_of.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{}" font-family="sans-serif" font-size="11">"#,
        PANEL_H * panels
    );
    for (i, &(ds, space)) in panels_of.iter().enumerate() {
        let pts: Vec<&ScatterPoint> = points
            .iter()
            .filter(|p| p.dataset_id == ds && p.objective_space == space)
            .collect();
        let (xa, ya) = axes(space);
        let (x0, x1) = range(pts.iter().map(|p| xa.value(p)));
        let (y0, y1) = range(pts.iter().map(|p| ya.value(p)));
        let top = PANEL_H * i as f64;
        let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (PANEL_W - 2.0 * MARGIN);
        let sy = |v: f64| top + PANEL_H - MARGIN - (v - y0) / (y1 - y0) * (PANEL_H - 2.0 * MARGIN);
        let (left, right, bottom, upper) = (
            MARGIN,
            PANEL_W - MARGIN,
            top + PANEL_H - MARGIN,
            top + MARGIN,
        );

        let _ = writeln!(
            svg,
            r#"<g class="panel" data-dataset="{}" data-space="{space}">"#,
            escape(ds)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{} / {}</text>"#,
            PANEL_W / 2.0,
            top + MARGIN / 2.0,
            escape(ds),
            space
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{left}" y="{upper}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
            right - left,
            bottom - upper
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = x0 + t * (x1 - x0);
            let yv = y0 + t * (y1 - y0);
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                bottom + 16.0,
                xa.tick(xv)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                left - 6.0,
                sy(yv) + 4.0,
                ya.tick(yv)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            PANEL_W / 2.0,
            bottom + 36.0,
            xa.title()
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            (upper + bottom) / 2.0,
            (upper + bottom) / 2.0,
            ya.title()
        );
        for p in &pts {
            let (cx, cy) = (sx(xa.value(p)), sy(ya.value(p)));
            let (fill, class) = if p.on_frontier {
                ("#d62728", "frontier")
            } else {
                ("#9e9e9e", "dominated")
            };
            let _ = writeln!(
                svg,
                r#"<circle class="{class}" cx="{cx:.1}" cy="{cy:.1}" r="5" fill="{fill}"><title>{}</title></circle>"#,
                escape(&p.candidate)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                cx + 7.0,
                cy - 5.0,
                escape(&p.candidate)
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
